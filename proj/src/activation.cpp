#include "dsgd/activation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dsgd {

namespace {

double logistic(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

}  // namespace

double Activation::value(double u) const {
  return kind == ActivationKind::Sigmoid ? logistic(u) : std::tanh(u);
}

double Activation::d1(double u) const {
  if (kind == ActivationKind::Sigmoid) {
    const double s = logistic(u);
    return s * (1.0 - s);
  }
  const double t = std::tanh(u);
  return 1.0 - t * t;
}

double Activation::d2(double u) const {
  if (kind == ActivationKind::Sigmoid) {
    const double s = logistic(u);
    return s * (1.0 - s) * (1.0 - 2.0 * s);
  }
  const double t = std::tanh(u);
  return -2.0 * t * (1.0 - t * t);
}

double Activation::d3(double u) const {
  if (kind == ActivationKind::Sigmoid) {
    const double s = logistic(u);
    const double d = s * (1.0 - s);
    return d * (1.0 - 6.0 * d);
  }
  const double t = std::tanh(u);
  const double sech2 = 1.0 - t * t;
  return -2.0 * sech2 * (sech2 - 2.0 * t * t);
}

Activation Activation::sigmoid() {
  // s'' = s(1-s)(1-2s) peaks at s = 1/2 - 1/(2 sqrt 3), value 1/(6 sqrt 3).
  return {ActivationKind::Sigmoid, "sigmoid", 1.0, 0.25, 1.0 / (6.0 * std::sqrt(3.0))};
}

Activation Activation::tanh() {
  // tanh'' = -2 t (1 - t^2) peaks at t = 1/sqrt 3, value 4/(3 sqrt 3).
  return {ActivationKind::Tanh, "tanh", 1.0, 1.0, 4.0 / (3.0 * std::sqrt(3.0))};
}

Activation Activation::from_name(std::string_view name) {
  if (name == "sigmoid") return sigmoid();
  if (name == "tanh") return tanh();
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

double sigmoid_d2_argmax() { return std::log(2.0 - std::sqrt(3.0)); }

}  // namespace dsgd
