// One PASS/FAIL line per acceptance criterion; exit status is nonzero when
// any hard criterion fails. Criterion 9 is informational.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "dsgd/bounds.hpp"
#include "dsgd/idx.hpp"
#include "dsgd/synthetic.hpp"
#include "dsgd/trainer.hpp"
#include "dsgd/verify.hpp"

using namespace dsgd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;
std::vector<int> selected;  // empty = all

void report(int id, const char* name, double limit_s, const std::function<Outcome()>& body,
            bool informational = false) {
  if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) return;
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = limit_s <= 0 || secs <= limit_s;
  const bool pass = o.pass && in_time;
  if (!pass && !informational) ++failures;
  std::printf("%s criterion %d (%s%s): %s [%.1fs%s]\n", pass ? "PASS" : "FAIL", id, name,
              informational ? ", informational" : "", o.detail.c_str(), secs,
              in_time ? "" : " over time limit");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

Dataset teacher_data(std::size_t m, const std::vector<std::size_t>& sizes, std::uint64_t seed) {
  SyntheticSpec s;
  s.seed = seed;
  s.m = m;
  s.sizes = sizes;
  return synthetic_dataset(s).data;
}

NetworkParams init(const NetworkArch& a, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  return NetworkParams::uniform(a, rng, scale);
}

double squared_dual(const NetworkParams& w, const Dataset& d) {
  const double n = local_dual_grad_norm(w, objective_and_layer_grads(w, d).grads).value;
  return n * n;
}

Outcome duality() {
  std::string detail;
  bool ok = true;
  for (NormTag q : {NormTag::Q2, NormTag::QInf}) {
    const AuditSummary s = audit_duality_axioms(1000, q, 1);
    ok = ok && s.ok() && s.passed == 1000;
    detail += fmt("q=%s %zu/1000 max_err/tol=%.3g; ", to_string(q).data(), s.passed, s.max_ratio);
  }
  return {ok, detail};
}

Outcome hessian() {
  std::string detail;
  bool ok = true;
  std::size_t inconclusive = 0;
  for (std::size_t K = 1; K <= 3; ++K)
    for (NormTag q : {NormTag::Q2, NormTag::QInf}) {
      const AuditSummary s = audit_hessian_configs(K, q, 100, 10 * K + (q == NormTag::Q2 ? 0 : 1));
      ok = ok && s.ok() && s.passed + s.inconclusive == s.trials;
      inconclusive += s.inconclusive;
      detail += fmt("K=%zu q=%s %zu/%zu max_ratio=%.3f; ", K, to_string(q).data(), s.passed,
                    s.trials, s.max_ratio);
    }
  detail += fmt("inconclusive=%zu", inconclusive);
  return {ok && inconclusive == 0, detail};
}

Outcome quadratic() {
  std::string detail;
  bool ok = true;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(8), z(8);
  for (auto& v : x) v = u(rng);
  for (auto& v : z) v = u(rng);
  const Dataset d(2, 2, x, z);
  for (NormTag q : {NormTag::Q2, NormTag::QInf}) {
    const NetworkArch arch({2, 3, 2}, Activation::sigmoid(), q);
    const QuadraticAuditReport r = audit_quadratic_bound(arch, d, 500, 4);
    ok = ok && r.summary.ok() && r.summary.passed == 500;
    detail += fmt("q=%s violations=%zu max_ratio=%.3f; ", to_string(q).data(), r.summary.failed,
                  r.summary.max_ratio);
  }
  return {ok, detail};
}

Outcome batch_certificate() {
  std::string detail;
  bool ok = true;
  const Dataset d = teacher_data(50, {4, 5, 3}, 5);
  for (NormTag q : {NormTag::Q2, NormTag::QInf}) {
    const NetworkArch arch({4, 5, 3}, Activation::sigmoid(), q);
    const NetworkParams w1 = init(arch, 6);
    const double G = objective_value(w1, d);
    TrainConfig cfg;
    cfg.q = q;
    cfg.eps = 1.0;
    cfg.max_iters = dsgd_bound_T(G, 1.0, 1.0, 0.1);
    const TrainResult r = train(w1, d, cfg);
    double mn = INFINITY;
    bool mono = true;
    for (std::size_t t = 0; t < r.records.size(); ++t) {
      mn = std::min(mn, r.records[t].dual_grad_norm);
      if (t > 0 && r.records[t].objective > r.records[t - 1].objective) mono = false;
    }
    ok = ok && mn <= 0.1 && mono;
    detail += fmt("q=%s T=%zu f(w1)=%.4g min_dual=%.4g monotone=%d; ", to_string(q).data(),
                  cfg.max_iters, G, mn, mono);
  }
  return {ok, detail};
}

Outcome stochastic() {
  const NetworkArch arch({4, 5, 3}, Activation::sigmoid(), NormTag::Q2);
  const Dataset d = teacher_data(50, {4, 5, 3}, 7);
  const NetworkParams w1 = init(arch, 8);

  // b = m with the full index set as the minibatch.
  TrainConfig batch;
  batch.max_iters = 200;
  TrainConfig full = batch;
  full.mode = TrainMode::Stochastic;
  full.batch_size = d.size();
  TrainHooks all;
  all.sampler = [&](std::size_t, std::mt19937_64&) {
    std::vector<std::size_t> idx(d.size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
  };
  const TrainResult a = train(w1, d, batch), b = train(w1, d, full, all);
  bool identical = a.params.weights == b.params.weights && a.records.size() == b.records.size();
  for (std::size_t t = 0; identical && t < a.records.size(); ++t)
    identical = a.records[t].objective == b.records[t].objective &&
                a.records[t].dual_grad_norm == b.records[t].dual_grad_norm &&
                a.records[t].block == b.records[t].block;

  // sigma^2: largest Monte-Carlo estimate of E |g_B - g|_w^2 over probe
  // points taken from a batch trajectory.
  const std::size_t bs = 8;
  double sigma2 = 0.0;
  {
    TrainConfig probe = batch;
    probe.max_iters = 400;
    std::vector<NetworkParams> points;
    TrainHooks h;
    h.observer = [&](const NetworkParams& w, const RunRecord& rec) {
      if (rec.t % 20 == 1) points.push_back(w);
    };
    train(w1, d, probe, h);
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<std::size_t> pick(0, d.size() - 1);
    for (const auto& w : points) {
      const BlockVector g = objective_and_layer_grads(w, d).grads;
      const BoundPolynomials bp = bound_polynomials(w);
      double acc = 0.0;
      const int S = 400;
      for (int s = 0; s < S; ++s) {
        std::vector<std::size_t> idx(bs);
        for (auto& i : idx) i = pick(rng);
        BlockVector e = objective_and_layer_grads(w, d, std::span<const std::size_t>(idx)).grads;
        add_scaled(e, g, -1.0);
        const double n = local_dual_grad_norm(bp, arch.q, e).value;
        acc += n * n;
      }
      sigma2 = std::max(sigma2, acc / S);
    }
  }
  const double vb = variance_bound(arch, bs);
  // A small alpha keeps the admissible gamma below |df(w1)|^2 so tau is not
  // trivially 1.
  const double alpha = 0.1;
  const double gamma = 1.5 * 13 * sigma2 / ((1 - alpha) * (1 - alpha));
  const double G = objective_value(w1, d);
  const std::optional<double> bound = sgd_expected_tau_bound(G, alpha, gamma, sigma2);

  struct Stop {};
  const std::size_t cap = 200000;
  double sum = 0.0;
  std::size_t censored = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    TrainConfig cfg;
    cfg.mode = TrainMode::Stochastic;
    cfg.batch_size = bs;
    cfg.eps = 2 * alpha;
    cfg.max_iters = cap;
    cfg.seed = 1000 + seed;
    std::size_t tau = cap;
    TrainHooks h;
    h.observer = [&](const NetworkParams& w, const RunRecord& rec) {
      if (squared_dual(w, d) <= gamma) {
        tau = rec.t;
        throw Stop{};
      }
    };
    bool stopped = false;
    try {
      train(w1, d, cfg, h);
    } catch (const Stop&) {
      stopped = true;
    }
    if (!stopped) ++censored;
    sum += static_cast<double>(tau);
  }
  const double mean_tau = sum / 50;
  const bool ok = identical && sigma2 <= vb && bound && censored == 0 && mean_tau <= *bound;
  return {ok, fmt("b=m bit-identical=%d; b=8 |df(w1)|^2=%.4g sigma2=%.4g (analytic %.4g) gamma=%.4g "
                  "mean_tau=%.2f bound=%.2f censored=%zu",
                  identical, squared_dual(w1, d), sigma2, vb, gamma, mean_tau, bound ? *bound : NAN, censored)};
}

Outcome counterexample() {
  const double eps[] = {1, 10, 100, 1000};
  double v[4], an[4];
  bool inc = true;
  for (int i = 0; i < 4; ++i) {
    const CounterexamplePoint p = z_eps(0.0, 0.0, eps[i]);
    v[i] = std::abs(fd_counterexample_w1w2(p));
    an[i] = std::abs(counterexample_derivatives(p).E_w1w2);
    if (i > 0 && !(v[i] > v[i - 1] && an[i] > an[i - 1])) inc = false;
  }
  const double ratio = v[3] / v[0], an_ratio = an[3] / an[0];
  return {inc && ratio >= 100 && an_ratio >= 100,
          fmt("|E_w1w2| fd = %.4g %.4g %.4g %.4g, ratio fd=%.1f analytic=%.1f", v[0], v[1], v[2],
              v[3], ratio, an_ratio)};
}

Outcome loss_identities() {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_g = 0.0, worst_h2 = 0.0, worst_hinf = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = dim(rng);
    std::vector<double> x(n), z(n);
    for (auto& a : x) a = u(rng);
    for (auto& a : z) a = u(rng);
    auto J = [&](std::span<const double> a) { return loss(a, z); };
    // Central differences carry no truncation error on a quadratic, so a
    // wide step only reduces rounding.
    const auto g = fd_gradient(J, x, FDSettings{1e-2, 1e-5});
    double gn = 0.0, dn = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      gn += g[i] * g[i];
      dn += (x[i] - z[i]) * (x[i] - z[i]);
    }
    worst_g = std::max(worst_g, std::abs(std::sqrt(gn) - 2 * std::sqrt(dn)));
    const DenseMatrix H = fd_hessian(J, x, 1e-3);
    worst_h2 = std::max(worst_h2, std::abs(bilinear_form_norm(H, n, 1, NormTag::Q2, rng) - 2.0));
    worst_hinf = std::max(worst_hinf,
                          std::abs(bilinear_form_norm(H, n, 1, NormTag::QInf, rng) - 2.0 * n));
  }
  return {worst_g <= 1e-10 && worst_h2 <= 1e-6 && worst_hinf <= 1e-6,
          fmt("max |grad|-2|x-z| = %.2g, max Hessian err q=2 %.2g q=inf %.2g", worst_g, worst_h2,
              worst_hinf)};
}

struct SmokeData {
  Dataset data;
  std::string source;
};

SmokeData smoke_data() {
  const char* dir = std::getenv("DSGD_MNIST_DIR");
  if (dir) {
    const std::filesystem::path p(dir);
    const auto img = p / "train-images-idx3-ubyte", lab = p / "train-labels-idx1-ubyte";
    if (std::filesystem::exists(img) && std::filesystem::exists(lab)) {
      const Dataset all = load_idx(img.string(), lab.string(), 10);
      std::vector<std::size_t> idx(all.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), std::mt19937_64(12));
      idx.resize(std::min<std::size_t>(1000, idx.size()));
      std::sort(idx.begin(), idx.end());
      return {all.subset(idx), "MNIST"};
    }
  }
  return {teacher_data(1000, {784, 50, 10}, 12), "teacher fallback"};
}

std::optional<SmokeData> smoke;

Outcome smoke_run() {
  smoke = smoke_data();
  const NetworkArch arch({784, 50, 10}, Activation::sigmoid(), NormTag::Q2);
  TrainConfig cfg;
  cfg.eps = 1.0;
  cfg.max_iters = 2000;
  const TrainResult r = train(init(arch, 13), smoke->data, cfg);
  bool mono = true;
  for (std::size_t t = 1; t < r.records.size(); ++t)
    if (r.records[t].objective > r.records[t - 1].objective) mono = false;
  const double first = r.records.front().objective;
  const double last = objective_value(r.params, smoke->data);
  return {mono && last <= 0.5 * first,
          fmt("%s: initial=%.6g final=%.6g ratio=%.4f (need <= 0.5) monotone=%d",
              smoke->source.c_str(), first, last, last / first, mono)};
}

Outcome layer_streak() {
  if (!smoke) smoke = smoke_data();
  const NetworkArch arch({784, 50, 10}, Activation::sigmoid(), NormTag::QInf);
  TrainConfig cfg;
  cfg.q = NormTag::QInf;
  cfg.max_iters = 100;
  const TrainResult r = train(init(arch, 13), smoke->data, cfg);
  std::size_t best = 0, run = 0, layer2 = 0;
  for (const auto& rec : r.records) {
    const bool hit = rec.block && *rec.block == 1;
    layer2 += hit ? 1 : 0;
    run = hit ? run + 1 : 0;
    best = std::max(best, run);
  }
  return {best >= 10, fmt("layer-2 updates=%zu/100 longest streak=%zu", layer2, best)};
}

}  // namespace

// Optional arguments restrict the run to the listed criterion numbers.
int main(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  report(1, "duality axioms", 10, duality);
  report(2, "layer Hessian bound audit", 300, hessian);
  report(3, "quadratic bound audit", 60, quadratic);
  report(4, "batch convergence certificate", 60, batch_certificate);
  report(5, "stochastic driver", 300, stochastic);
  report(6, "counterexample growth", 5, counterexample);
  report(7, "loss derivative identities", 0, loss_identities);
  report(8, "desk-scale smoke", 600, smoke_run);
  report(9, "layer update streak", 0, layer_streak, true);
  std::printf("%d hard criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
