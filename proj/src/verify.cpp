#include "dsgd/verify.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace dsgd {

FiniteDifferenceError::FiniteDifferenceError(std::size_t coordinate)
    : std::runtime_error("non-finite function value while differencing coordinate " +
                         std::to_string(coordinate)),
      coord_(coordinate) {}

std::vector<double> fd_gradient(const ScalarFn& f, std::span<const double> w, const FDSettings& s) {
  std::vector<double> x(w.begin(), w.end());
  std::vector<double> g(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double x0 = x[j];
    x[j] = x0 + s.h;
    const double fp = f(x);
    x[j] = x0 - s.h;
    const double fm = f(x);
    x[j] = x0;
    if (!std::isfinite(fp) || !std::isfinite(fm)) throw FiniteDifferenceError(j);
    g[j] = (fp - fm) / (2.0 * s.h);
  }
  return g;
}

DenseMatrix fd_hessian(const ScalarFn& f, std::span<const double> w, double h) {
  const std::size_t n = w.size();
  std::vector<double> x(w.begin(), w.end());
  DenseMatrix H(n, n);
  const double f0 = f(x);
  if (!std::isfinite(f0)) throw FiniteDifferenceError(0);
  auto eval = [&](std::size_t j) {
    const double v = f(x);
    if (!std::isfinite(v)) throw FiniteDifferenceError(j);
    return v;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = x[i];
    x[i] = xi + h;
    const double fp = eval(i);
    x[i] = xi - h;
    const double fm = eval(i);
    x[i] = xi;
    H(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double xj = x[j];
      double acc = 0.0;
      for (int si = -1; si <= 1; si += 2) {
        for (int sj = -1; sj <= 1; sj += 2) {
          x[i] = xi + si * h;
          x[j] = xj + sj * h;
          acc += si * sj * eval(j);
        }
      }
      x[i] = xi;
      x[j] = xj;
      H(i, j) = H(j, i) = acc / (4.0 * h * h);
    }
  }
  return H;
}

DenseMatrix fd_jacobian(const VectorFn& grad, std::span<const double> w, double h) {
  std::vector<double> x(w.begin(), w.end());
  const std::size_t n = x.size();
  std::optional<DenseMatrix> J;
  for (std::size_t j = 0; j < n; ++j) {
    const double x0 = x[j];
    x[j] = x0 + h;
    const std::vector<double> gp = grad(x);
    x[j] = x0 - h;
    const std::vector<double> gm = grad(x);
    x[j] = x0;
    if (!J) J.emplace(gp.size(), n);
    for (std::size_t i = 0; i < gp.size(); ++i) {
      const double d = (gp[i] - gm[i]) / (2.0 * h);
      if (!std::isfinite(d)) throw FiniteDifferenceError(j);
      (*J)(i, j) = d;
    }
  }
  if (!J) throw std::invalid_argument("fd_jacobian: empty point");
  return *J;
}

double max_relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_relative_error: size mismatch");
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    e = std::max(e, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(b[i])));
  return e;
}

namespace {

// Dual q-norm of the functional h reshaped to rows x cols.
double reshaped_dual_norm(std::span<const double> h, std::size_t rows, std::size_t cols, NormTag q) {
  return dual_norm(DenseMatrix(rows, cols, std::vector<double>(h.begin(), h.end())), q);
}

double bilinear_inf(const DenseMatrix& H, std::size_t rows, std::size_t cols) {
  const std::size_t n = rows * cols;
  // levels[r] = sum over rows < r of s_r * H.row(r * cols + c_r)
  std::vector<std::vector<double>> levels(rows + 1, std::vector<double>(n, 0.0));
  double best = 0.0;
  auto dfs = [&](auto&& self, std::size_t r) -> void {
    if (r == rows) {
      best = std::max(best, reshaped_dual_norm(levels[r], rows, cols, NormTag::QInf));
      return;
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const auto hr = H.row(r * cols + c);
      // Negating every sign gives the same value, so row 0 keeps +1.
      for (int s = 1; s >= (r == 0 ? 1 : -1); s -= 2) {
        for (std::size_t k = 0; k < n; ++k) levels[r + 1][k] = levels[r][k] + s * hr[k];
        self(self, r + 1);
      }
    }
  };
  dfs(dfs, 0);
  return best;
}

std::vector<double> matvec(const DenseMatrix& A, std::span<const double> x) {
  std::vector<double> y(A.rows(), 0.0);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    const auto r = A.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

// Unit-spectral-norm maximizer of <L, .>, i.e. the polar factor of L.
DenseMatrix polar_direction(const DenseMatrix& L) {
  const double d = dual_norm(L, NormTag::Q2);
  DenseMatrix U = duality_map(L, NormTag::Q2);
  U *= 1.0 / d;
  return U;
}

double bilinear_q2(const DenseMatrix& H, std::size_t rows, std::size_t cols, std::mt19937_64& rng,
                   int restarts) {
  const DenseMatrix Ht = H.transposed();
  std::normal_distribution<double> normal;
  double best = 0.0;
  for (int r = 0; r < restarts; ++r) {
    std::vector<double> init(rows * cols);
    for (auto& v : init) v = normal(rng);
    DenseMatrix U(rows, cols, std::move(init));
    U = polar_direction(U);
    double value = 0.0;
    for (int it = 0; it < 500; ++it) {
      // sup over V of vec(U)^T H vec(V) is the trace norm of H^T vec(U).
      const std::vector<double> lv = matvec(Ht, U.values());
      const DenseMatrix Lv(rows, cols, lv);
      const double dv = dual_norm(Lv, NormTag::Q2);
      if (dv == 0.0) break;
      const DenseMatrix V = polar_direction(Lv);
      const std::vector<double> lu = matvec(H, V.values());
      const DenseMatrix Lu(rows, cols, lu);
      const double du = dual_norm(Lu, NormTag::Q2);
      if (du == 0.0) break;
      U = polar_direction(Lu);
      const bool settled = du - value <= 1e-13 * std::max(1.0, du);
      value = std::max(value, du);
      if (settled) break;
    }
    best = std::max(best, value);
  }
  return best;
}

}  // namespace

double bilinear_form_norm(const DenseMatrix& H, std::size_t rows, std::size_t cols, NormTag q,
                          std::mt19937_64& rng, int restarts) {
  if (H.rows() != rows * cols || H.cols() != rows * cols)
    throw std::invalid_argument("bilinear_form_norm: H must be (rows*cols) square");
  if (H.is_zero()) return 0.0;
  if (q == NormTag::QInf) return bilinear_inf(H, rows, cols);
  return bilinear_q2(H, rows, cols, rng, std::max(restarts, 1));
}

std::string AuditSummary::to_text() const {
  std::ostringstream os;
  os << name << ": trials=" << trials << " passed=" << passed << " failed=" << failed
     << " inconclusive=" << inconclusive << " max_ratio=" << std::setprecision(6) << max_ratio;
  return os.str();
}

void write_audit_csv(std::ostream& os, const std::vector<AuditSummary>& rows) {
  os << "audit,trials,passed,failed,inconclusive,max_ratio\n";
  for (const auto& r : rows)
    os << r.name << ',' << r.trials << ',' << r.passed << ',' << r.failed << ',' << r.inconclusive
       << ',' << std::setprecision(17) << r.max_ratio << '\n';
}

namespace {

DenseMatrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = u(rng);
  return DenseMatrix(rows, cols, std::move(v));
}

// Per-trial outcomes merged in trial order, so the summary does not depend
// on how trials were split across threads.
struct TrialOutcome {
  AuditStatus status = AuditStatus::Pass;
  double ratio = 0.0;
};

AuditSummary summarize(std::string name, const std::vector<TrialOutcome>& t) {
  AuditSummary s;
  s.name = std::move(name);
  s.trials = t.size();
  for (const auto& o : t) {
    if (o.status == AuditStatus::Pass) ++s.passed;
    else if (o.status == AuditStatus::Fail) ++s.failed;
    else ++s.inconclusive;
    s.max_ratio = std::max(s.max_ratio, o.ratio);
  }
  return s;
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t t) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(t)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

// Runs fn(0..n-1) across threads; the first exception is rethrown after
// the loop since it cannot cross the parallel region.
void parallel_trials(std::size_t n, const std::function<void(std::size_t)>& fn) {
  std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t t = 0; t < n; ++t) {
    try {
      fn(t);
    } catch (...) {
#pragma omp critical(dsgd_parallel_trials)
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace

AuditSummary audit_duality_axioms(std::size_t trials, NormTag q, std::uint64_t seed,
                                  std::size_t max_dim, double tol) {
  std::vector<TrialOutcome> out(trials);
  parallel_trials(trials, [&](std::size_t t) {
    std::mt19937_64 rng(trial_seed(seed, t));
    std::uniform_int_distribution<std::size_t> dim(1, max_dim);
    const std::size_t rows = dim(rng);
    const std::size_t cols = dim(rng);
    const DenseMatrix ell = random_matrix(rng, rows, cols, 1.0);
    const DenseMatrix rho = duality_map(ell, q);
    const double d = dual_norm(ell, q);
    const double e1 = std::abs(frobenius_inner(ell, rho) - d * d) / std::max(1.0, d * d);
    const double e2 = std::abs(operator_norm(rho, q) - d) / std::max(1.0, d);
    const double err = std::max(e1, e2);
    out[t] = {err <= tol ? AuditStatus::Pass : AuditStatus::Fail, err / tol};
  });
  return summarize(std::string("duality-axioms-") + std::string(to_string(q)), out);
}

LayerHessianAudit audit_layer_hessian(const NetworkParams& params, const Dataset& data,
                                      std::size_t layer, std::uint64_t seed, double h,
                                      double slack) {
  if (layer >= params.weights.size()) throw std::out_of_range("audit_layer_hessian: layer");
  const DenseMatrix& wl = params.weights[layer];
  const std::size_t rows = wl.rows();
  const std::size_t cols = wl.cols();
  if (params.arch.q == NormTag::QInf && cols > kHessianAuditMaxWidth)
    throw std::invalid_argument("audit_layer_hessian: layer too wide for vertex enumeration");

  NetworkParams probe = params;
  const VectorFn grad = [&](std::span<const double> x) {
    std::copy(x.begin(), x.end(), probe.weights[layer].values().begin());
    const ObjectiveGrad og = objective_and_layer_grads_serial(probe, data);
    const auto g = og.grads[layer].values();
    return std::vector<double>(g.begin(), g.end());
  };
  const DenseMatrix J = fd_jacobian(grad, wl.values(), h);

  LayerHessianAudit a;
  const std::size_t n = J.rows();
  DenseMatrix S(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      S(i, j) = 0.5 * (J(i, j) + J(j, i));
      a.asymmetry = std::max(a.asymmetry, std::abs(J(i, j) - J(j, i)));
    }
  std::mt19937_64 rng(seed);
  a.estimate = bilinear_form_norm(S, rows, cols, params.arch.q, rng);
  const double p = bound_polynomials(params).p[layer];
  a.bound = p * p;
  if (a.asymmetry > 1e-4 * a.bound) a.status = AuditStatus::Inconclusive;
  else if (a.estimate > a.bound + slack) a.status = AuditStatus::Fail;
  else a.status = AuditStatus::Pass;
  return a;
}

AuditSummary audit_hessian_configs(std::size_t K, NormTag q, std::size_t configs,
                                   std::uint64_t seed, std::size_t max_width, double weight_scale,
                                   const Activation& act) {
  if (K == 0) throw std::invalid_argument("audit_hessian_configs: K must be >= 1");
  std::vector<std::vector<TrialOutcome>> per(configs);
  parallel_trials(configs, [&](std::size_t c) {
    std::mt19937_64 rng(trial_seed(seed, c));
    std::uniform_int_distribution<std::size_t> width(1, max_width);
    std::vector<std::size_t> sizes(K + 1);
    for (auto& s : sizes) s = width(rng);
    const NetworkArch arch(sizes, act, q);
    NetworkParams params = NetworkParams::uniform(arch, rng, weight_scale);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> y(sizes.front()), z(sizes.back());
    for (auto& v : y) v = u(rng);
    for (auto& v : z) v = u(rng);
    const Dataset data(y.size(), z.size(), y, z);
    for (std::size_t i = 0; i < K; ++i) {
      const LayerHessianAudit a = audit_layer_hessian(params, data, i, rng());
      per[c].push_back({a.status, a.estimate / a.bound});
    }
  });
  std::vector<TrialOutcome> flat;
  for (auto& v : per) flat.insert(flat.end(), v.begin(), v.end());
  std::ostringstream name;
  name << "layer-hessian-K" << K << '-' << to_string(q);
  return summarize(name.str(), flat);
}

QuadraticAuditReport audit_quadratic_bound(const NetworkArch& arch, const Dataset& data,
                                           std::size_t trials, std::uint64_t seed,
                                           double weight_scale, double slack) {
  struct Trial {
    TrialOutcome outcome;
    std::optional<QuadraticViolation> violation;
  };
  std::vector<Trial> out(trials);
  parallel_trials(trials, [&](std::size_t t) {
    std::mt19937_64 rng(trial_seed(seed, t));
    NetworkParams w = NetworkParams::uniform(arch, rng, weight_scale);
    const ObjectiveGrad og = objective_and_layer_grads_serial(w, data);
    // Half of the trials probe along the gradient itself, half along a
    // random functional with a random overall magnitude.
    BlockVector eta;
    if (t % 2 == 0) {
      eta = og.grads;
    } else {
      std::uniform_real_distribution<double> mag(-2.0, 1.0);
      const double s = std::pow(10.0, mag(rng));
      for (const auto& m : w.weights) eta.push_back(random_matrix(rng, m.rows(), m.cols(), s));
    }
    std::uniform_real_distribution<double> ue(0.0, 2.0);
    double eps = ue(rng);
    while (eps == 0.0) eps = ue(rng);

    const BoundPolynomials b = bound_polynomials(w);
    const LayerUpdate up = network_duality_map(b, arch.q, eta);
    const double en = up.norm.value;
    NetworkParams moved = w;
    moved.weights[up.layer].add_scaled(up.delta, eps);
    const double f1 = objective_value(moved, data);
    const double inner = frobenius_inner(og.grads[up.layer], up.delta);
    const double lhs = std::abs(f1 - og.value - eps * inner);
    const double rhs = 0.5 * eps * eps * en * en;
    Trial& tr = out[t];
    tr.outcome.ratio = rhs > 0.0 ? lhs / rhs : 0.0;
    if (lhs <= rhs + slack) {
      tr.outcome.status = AuditStatus::Pass;
    } else {
      tr.outcome.status = AuditStatus::Fail;
      tr.violation = QuadraticViolation{w.weights, eta, eps, lhs, rhs};
    }
  });
  QuadraticAuditReport rep;
  std::vector<TrialOutcome> o;
  for (auto& tr : out) {
    o.push_back(tr.outcome);
    if (tr.violation && !rep.first_violation) rep.first_violation = tr.violation;
  }
  rep.summary = summarize(std::string("quadratic-bound-") + std::string(to_string(arch.q)), o);
  return rep;
}

namespace {

const Activation& logistic() {
  static const Activation a = Activation::sigmoid();
  return a;
}

}  // namespace

double counterexample_E(const CounterexamplePoint& p) {
  const Activation& s = logistic();
  const double f = s.value(p.w2 * s.value(p.w1 + p.b1) + p.b2);
  return f * f;
}

CounterexamplePoint z_eps(double w1, double b1, double eps) {
  return {w1, b1, eps, sigmoid_d2_argmax() - eps * logistic().value(w1 + b1)};
}

CounterexampleDerivatives counterexample_derivatives(const CounterexamplePoint& p) {
  const Activation& s = logistic();
  const double a = p.w1 + p.b1;
  const double h = s.value(a);
  const double h1 = s.d1(a);
  const double u = p.w2 * h + p.b2;
  const double g0 = s.value(u), g1 = s.d1(u), g2 = s.d2(u), g3 = s.d3(u);

  CounterexampleDerivatives d;
  d.f = g0;
  d.f_w1 = g1 * p.w2 * h1;
  d.f_w2 = g1 * h;
  d.f_w1w2 = g2 * h * p.w2 * h1 + g1 * h1;
  d.f_w2w2 = g2 * h * h;
  d.f_w1w2w2 = g3 * h * h * p.w2 * h1 + 2.0 * g2 * h * h1;
  d.E_w1w2 = 2.0 * d.f * d.f_w1w2 + 2.0 * d.f_w1 * d.f_w2;
  d.E_w1w2w2 = 4.0 * d.f_w2 * d.f_w1w2 + 2.0 * d.f * d.f_w1w2w2 + 2.0 * d.f_w1 * d.f_w2w2;
  return d;
}

double fd_counterexample_w1w2(const CounterexamplePoint& p, double h) {
  auto E = [&](double dw1, double dw2) {
    CounterexamplePoint q = p;
    q.w1 += dw1;
    q.w2 += dw2;
    return counterexample_E(q);
  };
  return (E(h, h) - E(h, -h) - E(-h, h) + E(-h, -h)) / (4.0 * h * h);
}

double fd_counterexample_w1w2w2(const CounterexamplePoint& p, double h) {
  auto E22 = [&](double dw1) {
    CounterexamplePoint q = p;
    q.w1 += dw1;
    const double e0 = counterexample_E(q);
    q.w2 += h;
    const double ep = counterexample_E(q);
    q.w2 -= 2.0 * h;
    const double em = counterexample_E(q);
    return (ep - 2.0 * e0 + em) / (h * h);
  };
  return (E22(h) - E22(-h)) / (2.0 * h);
}

}  // namespace dsgd
