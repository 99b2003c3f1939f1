#include "dsgd/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "dsgd/csv.hpp"
#include "dsgd/idx.hpp"

namespace dsgd {

namespace fs = std::filesystem;

std::string_view to_string(OptimizerChoice o) {
  switch (o) {
    case OptimizerChoice::EGD: return "egd";
    case OptimizerChoice::DSGD2: return "dsgd-2";
    case OptimizerChoice::DSGDInf: return "dsgd-inf";
  }
  return "?";
}

OptimizerChoice parse_optimizer(std::string_view s) {
  if (s == "egd") return OptimizerChoice::EGD;
  if (s == "dsgd-2" || s == "dsgd2") return OptimizerChoice::DSGD2;
  if (s == "dsgd-inf" || s == "dsgdinf") return OptimizerChoice::DSGDInf;
  throw std::invalid_argument("unknown optimizer '" + std::string(s) + "'");
}

void ExperimentSpec::validate() const {
  if (repetitions == 0) throw std::invalid_argument("repetitions must be >= 1");
  if (idx.has_value() == synthetic.has_value())
    throw std::invalid_argument("exactly one data source (IDX or synthetic) is required");
  if (sizes.size() < 2) throw std::invalid_argument("architecture needs at least two layer sizes");
  if (optimizers.empty()) throw std::invalid_argument("no optimizer selected");
  if (eval_every == 0) throw std::invalid_argument("eval_every must be >= 1");
  if (idx) {
    for (const auto* p : {&idx->train_images, &idx->train_labels})
      if (!fs::exists(*p)) throw std::invalid_argument("missing file " + *p);
    if (idx->test_images.empty() != idx->test_labels.empty())
      throw std::invalid_argument("test images and labels must be given together");
    if (!idx->test_images.empty())
      for (const auto* p : {&idx->test_images, &idx->test_labels})
        if (!fs::exists(*p)) throw std::invalid_argument("missing file " + *p);
  }
}

LoadedData load_experiment_data(const ExperimentSpec& spec) {
  spec.validate();
  const std::size_t n_out = spec.sizes.back();
  std::optional<Dataset> train, test;
  if (spec.idx) {
    train = load_idx(spec.idx->train_images, spec.idx->train_labels, n_out);
    if (!spec.idx->test_images.empty())
      test = load_idx(spec.idx->test_images, spec.idx->test_labels, n_out);
  } else {
    SyntheticSpec s = spec.synthetic->spec;
    const std::size_t m = s.m;
    s.m = m + spec.synthetic->test_m;
    // The generator's outer sizes follow the network; a teacher keeps its own hidden widths.
    s.sizes.front() = spec.sizes.front();
    s.sizes.back() = spec.sizes.back();
    const Dataset all = synthetic_dataset(s).data;
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    train = all.subset(idx);
    if (spec.synthetic->test_m > 0) {
      std::vector<std::size_t> t(spec.synthetic->test_m);
      std::iota(t.begin(), t.end(), m);
      test = all.subset(t);
    }
  }
  if (train->input_dim() != spec.sizes.front())
    throw std::invalid_argument("data input dimension " + std::to_string(train->input_dim()) +
                                " != n_0 " + std::to_string(spec.sizes.front()));
  if (spec.subset && *spec.subset < train->size()) {
    std::vector<std::size_t> idx(train->size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(spec.train.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(*spec.subset);
    std::sort(idx.begin(), idx.end());
    train = train->subset(idx);
  }
  return {std::move(*train), std::move(test)};
}

SummaryStat summarize(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("summarize: no values");
  SummaryStat s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) {
    s.std = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return s;
}

ExperimentAborted::ExperimentAborted(std::string run_id, const std::string& what)
    : std::runtime_error("run " + run_id + ": " + what), run_id_(std::move(run_id)) {}

namespace {

TrainConfig config_for(const ExperimentSpec& spec, OptimizerChoice o, std::uint64_t seed) {
  TrainConfig c = spec.train;
  c.seed = seed;
  c.optimizer = o == OptimizerChoice::EGD ? OptimizerKind::EGD : OptimizerKind::DSGD;
  if (o == OptimizerChoice::DSGDInf) c.q = NormTag::QInf;
  else if (o == OptimizerChoice::DSGD2) c.q = NormTag::Q2;
  return c;
}

std::vector<std::string> final_columns(const std::string& stem) {
  return {stem + "_mean", stem + "_std"};
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const LoadedData data = load_experiment_data(spec);
  fs::create_directories(spec.output_dir);
  const fs::path dir(spec.output_dir);
  const NetworkArch base(spec.sizes, spec.activation, spec.train.q);
  const std::size_t K = base.layers();

  ExperimentResult result;
  for (OptimizerChoice opt : spec.optimizers) {
    const std::string tag(to_string(opt));
    CsvWriter metrics((dir / ("metrics_" + tag + ".csv")).string(),
                      {"run_id", "iteration", "train_error", "train_accuracy", "test_error",
                       "test_accuracy", "layer", "dual_grad_norm"});
    std::vector<std::string> count_header{"run_id", "iteration"};
    for (std::size_t k = 1; k <= K; ++k) count_header.push_back("layer_" + std::to_string(k));
    CsvWriter counts((dir / ("counts_" + tag + ".csv")).string(), count_header);

    for (std::size_t r = 0; r < spec.repetitions; ++r) {
      const std::uint64_t seed = spec.train.seed + r;
      const std::string run_id = tag + "-r" + std::to_string(r);
      const TrainConfig cfg = config_for(spec, opt, seed);
      std::mt19937_64 init_rng(seed);
      // Every optimizer of repetition r starts from the same point.
      const NetworkParams init = NetworkParams::uniform(base, init_rng, spec.init_scale);

      std::vector<std::size_t> running(K, 0);
      TrainHooks hooks;
      hooks.observer = [&](const NetworkParams& w, const RunRecord& rec) {
        std::vector<std::string> row{run_id, format_number(rec.t), format_number(rec.objective)};
        const bool eval = rec.t % spec.eval_every == 0 || rec.t == 1 || rec.t == cfg.max_iters;
        if (eval) {
          row.push_back(format_number(evaluate(w, data.train).accuracy));
          if (data.test) {
            const Evaluation e = evaluate(w, *data.test);
            row.push_back(format_number(e.error));
            row.push_back(format_number(e.accuracy));
          } else {
            row.insert(row.end(), {"", ""});
          }
        } else {
          row.insert(row.end(), {"", "", ""});
        }
        row.push_back(rec.block ? format_number(*rec.block + 1) : std::string());
        row.push_back(format_number(rec.dual_grad_norm));
        metrics.row(row);

        if (rec.block) ++running[*rec.block];
        else for (auto& c : running) ++c;
        std::vector<std::string> crow{run_id, format_number(rec.t)};
        for (auto c : running) crow.push_back(format_number(c));
        counts.row(crow);
      };

      TrainResult tr = [&] {
        try {
          return train(init, data.train, cfg, hooks);
        } catch (const TrainingAborted& e) {
          metrics.comment("aborted: " + std::string(e.what()));
          std::ofstream mark(dir / "ABORTED", std::ios::app);
          mark << run_id << ' ' << e.what() << '\n';
          throw ExperimentAborted(run_id, e.what());
        }
      }();
      RunFinal f{run_id, opt, r, evaluate(tr.params, data.train), std::nullopt};
      if (data.test) f.test = evaluate(tr.params, *data.test);
      result.runs.push_back(std::move(f));
    }
  }

  std::vector<std::string> header{"optimizer", "repetitions"};
  for (const char* s : {"train_error", "train_accuracy", "test_error", "test_accuracy"})
    for (auto& c : final_columns(s)) header.push_back(c);
  CsvWriter summary((dir / "summary.csv").string(), header);
  for (OptimizerChoice opt : spec.optimizers) {
    std::vector<double> te, ta, se, sa;
    for (const auto& f : result.runs) {
      if (f.optimizer != opt) continue;
      te.push_back(f.train.error);
      ta.push_back(f.train.accuracy);
      if (f.test) {
        se.push_back(f.test->error);
        sa.push_back(f.test->accuracy);
      }
    }
    std::vector<std::string> row{std::string(to_string(opt)), format_number(te.size())};
    for (const auto* v : {&te, &ta, &se, &sa}) {
      if (v->empty()) {
        row.insert(row.end(), {"", ""});
        continue;
      }
      const SummaryStat s = summarize(*v);
      row.push_back(format_number(s.mean));
      row.push_back(format_number(s.std));
    }
    summary.row(row);
  }
  return result;
}

}  // namespace dsgd
