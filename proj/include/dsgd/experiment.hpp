#ifndef DSGD_EXPERIMENT_HPP
#define DSGD_EXPERIMENT_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dsgd/synthetic.hpp"
#include "dsgd/trainer.hpp"

namespace dsgd {

enum class OptimizerChoice { EGD, DSGD2, DSGDInf };

/// "egd", "dsgd-2", "dsgd-inf".
std::string_view to_string(OptimizerChoice o);
OptimizerChoice parse_optimizer(std::string_view s);

struct IdxSource {
  std::string train_images;
  std::string train_labels;
  std::string test_images;  // optional pair; empty = no test set
  std::string test_labels;
};

/// Synthetic data: `spec.m` training examples plus `test_m` held-out ones
/// drawn from the same generator.
struct SyntheticSource {
  SyntheticSpec spec;
  std::size_t test_m = 0;
};

struct ExperimentSpec {
  std::optional<IdxSource> idx;
  std::optional<SyntheticSource> synthetic;
  std::vector<std::size_t> sizes;  // n_0, hidden widths, n_K
  Activation activation = Activation::sigmoid();
  std::vector<OptimizerChoice> optimizers{OptimizerChoice::DSGD2};
  /// Shared fields; optimizer and q are set per optimizer choice.
  TrainConfig train;
  std::size_t repetitions = 1;
  std::optional<std::size_t> subset;  // first-N training examples after a seeded shuffle
  double init_scale = 0.5;            // initial weights ~ U(-s, s)
  std::size_t eval_every = 100;
  std::string output_dir = ".";

  /// Throws std::invalid_argument when inconsistent or a referenced file is missing.
  void validate() const;
};

struct LoadedData {
  Dataset train;
  std::optional<Dataset> test;
};

LoadedData load_experiment_data(const ExperimentSpec& spec);

struct RunFinal {
  std::string run_id;
  OptimizerChoice optimizer = OptimizerChoice::DSGD2;
  std::size_t repetition = 0;
  Evaluation train;
  std::optional<Evaluation> test;
};

struct SummaryStat {
  double mean = 0.0;
  double std = 0.0;  // sample (R - 1) standard deviation, NaN when R = 1
};

SummaryStat summarize(const std::vector<double>& values);

struct ExperimentResult {
  std::vector<RunFinal> runs;
};

class ExperimentAborted : public std::runtime_error {
 public:
  ExperimentAborted(std::string run_id, const std::string& what);
  const std::string& run_id() const { return run_id_; }

 private:
  std::string run_id_;
};

/// Writes, under spec.output_dir:
///   metrics_<opt>.csv  run_id,iteration,train_error,train_accuracy,test_error,
///                      test_accuracy,layer,dual_grad_norm
///   counts_<opt>.csv   run_id,iteration,layer_1..layer_K (cumulative)
///   summary.csv        one row per optimizer, mean and std of the finals
/// Accuracy and test columns are filled every eval_every iterations and at
/// the last iteration, empty otherwise. A training abort flushes what was
/// written, records the run in ABORTED and throws ExperimentAborted.
ExperimentResult run_experiment(const ExperimentSpec& spec);

}  // namespace dsgd

#endif  // DSGD_EXPERIMENT_HPP
