#include "dsgd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dsgd/svd.hpp"

namespace dsgd {

void TrainConfig::validate(std::size_t dataset_size) const {
  if (max_iters == 0) throw std::invalid_argument("TrainConfig: max_iters must be positive");
  if (optimizer == OptimizerKind::DSGD && !(eps > 0.0 && eps < 2.0))
    throw std::invalid_argument("TrainConfig: DSGD step-size must lie in (0, 2)");
  if (optimizer == OptimizerKind::EGD && !(egd_step > 0.0 && std::isfinite(egd_step)))
    throw std::invalid_argument("TrainConfig: EGD step-size must be positive");
  if (mode == TrainMode::Stochastic && (batch_size == 0 || batch_size > dataset_size))
    throw std::invalid_argument("TrainConfig: batch size must lie in [1, m]");
}

void LayerUpdateCounts::record(std::optional<std::size_t> layer) {
  if (layer) {
    ++totals.at(*layer);
  } else {
    for (auto& c : totals) ++c;
  }
  history.push_back(totals);
}

TrainingAborted::TrainingAborted(std::size_t t, const std::string& what)
    : std::runtime_error("training aborted at iteration " + std::to_string(t) + ": " + what),
      t_(t) {}

namespace {

std::string describe_nonfinite(const BlockVector& g) {
  std::ostringstream os;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!g[k].all_finite()) os << " layer " << k + 1;
  return os.str();
}

bool finite_blocks(const BlockVector& b) {
  return std::all_of(b.begin(), b.end(), [](const DenseMatrix& m) { return m.all_finite(); });
}

}  // namespace

TrainResult train(NetworkParams init, const Dataset& data, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
  cfg.validate(data.size());
  init.arch.q = cfg.q;
  TrainResult out{std::move(init), {}, LayerUpdateCounts(0)};
  NetworkParams& w = out.params;
  const std::size_t K = w.arch.layers();
  out.counts = LayerUpdateCounts(K);
  out.records.reserve(cfg.max_iters);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::vector<std::size_t> batch;

  for (std::size_t t = 1; t <= cfg.max_iters; ++t) {
    ObjectiveGrad og;
    if (cfg.mode == TrainMode::Batch) {
      og = objective_and_layer_grads(w, data);
    } else {
      if (hooks.sampler) {
        batch = hooks.sampler(t, rng);
      } else {
        batch.resize(cfg.batch_size);
        for (auto& i : batch) i = pick(rng);
      }
      og = objective_and_layer_grads(w, data, std::span<const std::size_t>(batch));
    }
    if (!std::isfinite(og.value)) throw TrainingAborted(t, "non-finite objective");
    if (!finite_blocks(og.grads))
      throw TrainingAborted(t, "non-finite gradient in" + describe_nonfinite(og.grads));

    BoundPolynomials bounds;
    std::optional<LayerUpdate> maybe_up;
    try {
      bounds = bound_polynomials(w);
      if (cfg.optimizer == OptimizerKind::DSGD)
        maybe_up = network_duality_map(bounds, cfg.q, og.grads);
    } catch (const SvdNotConverged& e) {
      throw TrainingAborted(t, e.what());
    }
    RunRecord rec{t, og.value, 0.0, std::nullopt, 0.0};

    if (cfg.optimizer == OptimizerKind::DSGD) {
      LayerUpdate& up = *maybe_up;
      rec.dual_grad_norm = up.norm.value;
      rec.block = up.layer;
      rec.step = cfg.eps;
      if (hooks.observer) hooks.observer(w, rec);
      w.weights[up.layer].add_scaled(up.delta, -cfg.eps);
    } else {
      rec.dual_grad_norm = local_dual_grad_norm(bounds, cfg.q, og.grads).value;
      rec.step = cfg.egd_step;
      if (hooks.observer) hooks.observer(w, rec);
      add_scaled(w.weights, og.grads, -cfg.egd_step);
    }
    if (!finite_blocks(w.weights))
      throw TrainingAborted(t, "update produced non-finite weights in" + describe_nonfinite(w.weights));
    out.counts.record(rec.block);
    out.records.push_back(rec);
  }
  return out;
}

double variance_bound(const NetworkArch& arch, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("variance_bound: batch size must be >= 1");
  const double n = static_cast<double>(arch.max_width());
  const double K = static_cast<double>(arch.layers());
  return 32.0 * std::pow(n, 5) * K * K / static_cast<double>(batch_size);
}

std::optional<double> sgd_expected_tau_bound(double initial_gap, double alpha, double gamma,
                                             double sigma2, double lipschitz) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("sgd_expected_tau_bound: alpha must lie in (0, 1)");
  const double threshold = 13.0 * sigma2 / ((1.0 - alpha) * (1.0 - alpha));
  if (gamma <= threshold) return std::nullopt;
  return (4.0 * lipschitz * initial_gap + gamma) /
         (4.0 * alpha * (1.0 - alpha) * (gamma - threshold));
}

StepSearchFailed::StepSearchFailed(std::vector<double> diverged)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "step-size search: every candidate diverged:";
        for (double d : diverged) os << ' ' << d;
        return os.str();
      }()),
      diverged_(std::move(diverged)) {}

StepSearchResult select_step(std::span<const double> candidates,
                             const std::function<double(double)>& final_error) {
  if (candidates.empty()) throw std::invalid_argument("select_step: no candidates");
  StepSearchResult r;
  r.candidates.assign(candidates.begin(), candidates.end());
  r.final_errors.resize(r.candidates.size());
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < r.candidates.size(); ++i) {
    double e;
    try {
      e = final_error(r.candidates[i]);
    } catch (const TrainingAborted&) {
      e = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(e)) {
      r.final_errors[i] = std::numeric_limits<double>::quiet_NaN();
      r.diverged.push_back(r.candidates[i]);
      continue;
    }
    r.final_errors[i] = e;
    if (!best || e < r.final_errors[*best] ||
        (e == r.final_errors[*best] && r.candidates[i] < r.candidates[*best]))
      best = i;
  }
  if (!best) throw StepSearchFailed(r.diverged);
  r.step = r.candidates[*best];
  return r;
}

StepSearchResult step_size_search(const NetworkParams& init, const Dataset& data,
                                  std::span<const double> candidates, std::size_t budget,
                                  std::uint64_t seed, std::size_t subset_size) {
  if (budget == 0) throw std::invalid_argument("step_size_search: budget must be >= 1");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(subset_size, idx.size()));
  std::sort(idx.begin(), idx.end());
  const Dataset sub = data.subset(idx);

  return select_step(candidates, [&](double step) {
    TrainConfig cfg;
    cfg.optimizer = OptimizerKind::EGD;
    cfg.egd_step = step;
    cfg.max_iters = budget;
    cfg.q = init.arch.q;
    cfg.seed = seed;
    const TrainResult run = train(init, sub, cfg);
    return objective_value(run.params, sub);
  });
}

}  // namespace dsgd
