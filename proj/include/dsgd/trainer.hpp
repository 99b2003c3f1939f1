#ifndef DSGD_TRAINER_HPP
#define DSGD_TRAINER_HPP

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsgd/bounds.hpp"
#include "dsgd/finsler.hpp"
#include "dsgd/network.hpp"

namespace dsgd {

enum class TrainMode { Batch, Stochastic };
enum class OptimizerKind { DSGD, EGD };

struct TrainConfig {
  TrainMode mode = TrainMode::Batch;
  NormTag q = NormTag::Q2;
  double eps = 1.0;              // DSGD step, must lie in (0, 2)
  std::size_t batch_size = 128;  // Stochastic only
  std::size_t max_iters = 100;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::DSGD;
  double egd_step = 0.1;  // EGD only

  /// Throws std::invalid_argument for an inconsistent config.
  void validate(std::size_t dataset_size) const;
};

/// Running per-layer update counts. `history[t-1]` is the cumulative count
/// after iteration t.
struct LayerUpdateCounts {
  std::vector<std::size_t> totals;
  std::vector<std::vector<std::size_t>> history;

  explicit LayerUpdateCounts(std::size_t layers = 0) : totals(layers, 0) {}
  /// Records one iteration; an empty layer means every layer moved (EGD).
  void record(std::optional<std::size_t> layer);
};

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(std::size_t t, const std::string& what);
  std::size_t iteration() const { return t_; }

 private:
  std::size_t t_;
};

struct TrainHooks {
  /// Overrides minibatch selection in Stochastic mode. Receives the
  /// iteration index and the run's generator.
  std::function<std::vector<std::size_t>(std::size_t, std::mt19937_64&)> sampler;
  /// Called at every iterate w(t) before it is updated.
  std::function<void(const NetworkParams&, const RunRecord&)> observer;
};

struct TrainResult {
  NetworkParams params;
  std::vector<RunRecord> records;
  LayerUpdateCounts counts;
};

/// Layer-wise DSGD (or the Euclidean baseline) on the empirical squared
/// error. In Batch mode each record holds the exact objective and local
/// dual gradient norm at w(t); in Stochastic mode both are minibatch
/// estimates. Minibatches are drawn uniformly with replacement.
TrainResult train(NetworkParams init, const Dataset& data, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

/// c / b with c = 32 n^5 K^2 and n the widest layer.
double variance_bound(const NetworkArch& arch, std::size_t batch_size);

/// Upper bound on E[tau] for step 2 alpha / L, or empty when
/// gamma <= 13 sigma^2 / (1 - alpha)^2.
std::optional<double> sgd_expected_tau_bound(double initial_gap, double alpha, double gamma,
                                             double sigma2, double lipschitz = 1.0);

struct StepSearchResult {
  double step = 0.0;
  std::vector<double> candidates;
  std::vector<double> final_errors;  // NaN for diverged candidates
  std::vector<double> diverged;
};

class StepSearchFailed : public std::runtime_error {
 public:
  explicit StepSearchFailed(std::vector<double> diverged);
  const std::vector<double>& diverged() const { return diverged_; }

 private:
  std::vector<double> diverged_;
};

inline constexpr std::array<double, 5> kDefaultStepGrid{0.001, 0.01, 0.1, 1.0, 10.0};

/// Picks the candidate with the smallest finite final error; the smaller
/// step wins ties. `final_error` may return a non-finite value or throw
/// TrainingAborted to signal divergence.
StepSearchResult select_step(std::span<const double> candidates,
                             const std::function<double(double)>& final_error);

/// Runs `budget` batch EGD iterations per candidate on a random subset of
/// at most `subset_size` examples and selects by final training error.
StepSearchResult step_size_search(const NetworkParams& init, const Dataset& data,
                                  std::span<const double> candidates, std::size_t budget,
                                  std::uint64_t seed, std::size_t subset_size = 10000);

}  // namespace dsgd

#endif  // DSGD_TRAINER_HPP
