#ifndef DSGD_ACTIVATION_HPP
#define DSGD_ACTIVATION_HPP

#include <string_view>

namespace dsgd {

enum class ActivationKind { Sigmoid, Tanh };

/// Smooth bounded nonlinearity with its sup-norm constants |s|_inf,
/// |s'|_inf and |s''|_inf.
struct Activation {
  ActivationKind kind;
  std::string_view name;
  double sup_abs;
  double sup_abs_d1;
  double sup_abs_d2;

  double value(double u) const;
  double d1(double u) const;
  double d2(double u) const;
  double d3(double u) const;

  static Activation sigmoid();
  static Activation tanh();
  static Activation from_name(std::string_view name);
};

/// Point where the logistic sigmoid's second derivative is largest,
/// ln(2 - sqrt 3).
double sigmoid_d2_argmax();

}  // namespace dsgd

#endif  // DSGD_ACTIVATION_HPP
