// Command-line front end: train, verify, search-step, demo-counterexample.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsgd/csv.hpp"
#include "dsgd/experiment.hpp"
#include "dsgd/verify.hpp"

using namespace dsgd;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Appends "--key=value" for each line of a flat key=value file. Appended
// arguments come last, and every option keeps its last value, so the file
// overrides flags given on the command line.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::vector<std::string> out;
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key=value");
    out.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  for (const auto& t : split(s, ',')) out.push_back(std::stoul(t));
  return out;
}

std::vector<double> parse_reals(const std::string& s) {
  std::vector<double> out;
  for (const auto& t : split(s, ',')) out.push_back(std::stod(t));
  return out;
}

struct DataArgs {
  std::string train_images, train_labels, test_images, test_labels;
  std::string synthetic;
  std::size_t m = 1000;
  std::size_t test_m = 0;
  std::string teacher_sizes;
  double teacher_scale = 1.0;
  std::string sizes = "784,50,10";
  std::string activation = "sigmoid";
  std::optional<std::size_t> subset;
};

void add_data_options(CLI::App* app, DataArgs& d) {
  app->add_option("--train-images", d.train_images, "IDX image file for training");
  app->add_option("--train-labels", d.train_labels, "IDX label file for training");
  app->add_option("--test-images", d.test_images, "IDX image file for evaluation");
  app->add_option("--test-labels", d.test_labels, "IDX label file for evaluation");
  app->add_option("--synthetic", d.synthetic, "synthetic generator: teacher or clusters");
  app->add_option("--m", d.m, "synthetic training examples");
  app->add_option("--test-m", d.test_m, "synthetic held-out examples");
  app->add_option("--teacher-sizes", d.teacher_sizes,
                  "teacher layer sizes (defaults to the network's)");
  app->add_option("--teacher-scale", d.teacher_scale, "teacher weights ~ U(-s, s)");
  app->add_option("--sizes", d.sizes, "layer sizes n_0,...,n_K");
  app->add_option("--activation", d.activation, "sigmoid or tanh");
  app->add_option("--subset", d.subset, "train on a random subset of this many examples");
  app->add_option("--config", "flat key=value file; its entries override flags");
}

void fill_data(const DataArgs& d, std::uint64_t seed, ExperimentSpec& spec) {
  spec.sizes = parse_sizes(d.sizes);
  spec.activation = Activation::from_name(d.activation);
  spec.subset = d.subset;
  if (!d.synthetic.empty()) {
    SyntheticSource s;
    s.spec.generator = d.synthetic;
    s.spec.seed = seed;
    s.spec.m = d.m;
    s.spec.sizes = d.teacher_sizes.empty() ? spec.sizes : parse_sizes(d.teacher_sizes);
    s.spec.activation = spec.activation;
    s.spec.teacher_scale = d.teacher_scale;
    s.test_m = d.test_m;
    spec.synthetic = s;
  } else {
    spec.idx = IdxSource{d.train_images, d.train_labels, d.test_images, d.test_labels};
  }
}

int run_verify(std::uint64_t seed, std::size_t trials, const std::string& which,
               const std::string& csv_path) {
  std::vector<AuditSummary> rows;
  const bool all = which == "all";
  if (all || which == "duality")
    for (NormTag q : {NormTag::Q2, NormTag::QInf})
      rows.push_back(audit_duality_axioms(trials * 10, q, seed));
  if (all || which == "hessian")
    for (std::size_t K = 1; K <= 3; ++K)
      for (NormTag q : {NormTag::Q2, NormTag::QInf})
        rows.push_back(audit_hessian_configs(K, q, trials, seed + K));
  if (all || which == "quadratic") {
    std::mt19937_64 rng(seed);
    const NetworkArch arch({2, 3, 2}, Activation::sigmoid(), NormTag::Q2);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> y(2 * 4), z(2 * 4);
    for (auto& v : y) v = u(rng);
    for (auto& v : z) v = u(rng);
    const Dataset data(2, 2, y, z);
    for (NormTag q : {NormTag::Q2, NormTag::QInf}) {
      NetworkArch a = arch;
      a.q = q;
      const QuadraticAuditReport rep = audit_quadratic_bound(a, data, trials * 5, seed);
      rows.push_back(rep.summary);
      if (rep.first_violation)
        std::cout << "  first violation: eps=" << rep.first_violation->eps
                  << " lhs=" << rep.first_violation->lhs << " rhs=" << rep.first_violation->rhs
                  << '\n';
    }
  }
  if (all || which == "counterexample") {
    AuditSummary s{"counterexample-growth"};
    double prev = 0.0;
    double first = 0.0;
    for (double eps : {1.0, 10.0, 100.0, 1000.0}) {
      const double v = std::abs(fd_counterexample_w1w2(z_eps(0.0, 0.0, eps)));
      if (eps == 1.0) first = v;
      ++s.trials;
      if (v > prev) ++s.passed;
      else ++s.failed;
      prev = v;
    }
    if (prev / first < 100.0) ++s.failed;
    s.max_ratio = prev / first;
    rows.push_back(s);
  }
  if (rows.empty()) throw std::invalid_argument("unknown audit '" + which + "'");
  bool ok = true;
  for (const auto& r : rows) {
    std::cout << r.to_text() << '\n';
    ok = ok && r.ok();
  }
  if (!csv_path.empty()) {
    std::ofstream out(csv_path, std::ios::binary);
    write_audit_csv(out, rows);
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-wise duality structure gradient descent for multilayer perceptrons"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // train
  auto* train_cmd = app.add_subcommand("train", "train networks and write metric CSVs");
  DataArgs train_data;
  add_data_options(train_cmd, train_data);
  std::uint64_t seed = 0;
  std::string optimizers = "dsgd-2";
  std::string mode = "batch";
  std::string out_dir = "out";
  ExperimentSpec spec;
  train_cmd->add_option("--seed", seed, "base seed; repetition r uses seed + r")->required();
  train_cmd->add_option("--optimizers", optimizers, "comma list of egd, dsgd-2, dsgd-inf");
  train_cmd->add_option("--mode", mode, "batch or stochastic");
  train_cmd->add_option("--eps", spec.train.eps, "DSGD step size in (0, 2)");
  train_cmd->add_option("--egd-step", spec.train.egd_step, "Euclidean step size");
  train_cmd->add_option("--batch-size", spec.train.batch_size, "minibatch size");
  train_cmd->add_option("--iters", spec.train.max_iters, "iterations per run");
  train_cmd->add_option("--reps", spec.repetitions, "repetitions per optimizer");
  train_cmd->add_option("--init-scale", spec.init_scale, "initial weights ~ U(-s, s)");
  train_cmd->add_option("--eval-every", spec.eval_every, "accuracy/test evaluation cadence");
  train_cmd->add_option("--out", out_dir, "output directory");

  // verify
  auto* verify_cmd = app.add_subcommand("verify", "run the numerical audits");
  std::uint64_t verify_seed = 1;
  std::size_t trials = 100;
  std::string which = "all";
  std::string csv_path;
  verify_cmd->add_option("--seed", verify_seed, "audit seed");
  verify_cmd->add_option("--trials", trials, "configurations per audit");
  verify_cmd->add_option("--audit", which, "all, duality, hessian, quadratic, counterexample");
  verify_cmd->add_option("--csv", csv_path, "also write a summary CSV here");
  verify_cmd->add_option("--config", "flat key=value file; its entries override flags");

  // search-step
  auto* search_cmd = app.add_subcommand("search-step", "grid search the Euclidean step size");
  DataArgs search_data;
  add_data_options(search_cmd, search_data);
  std::uint64_t search_seed = 0;
  std::size_t budget = 100;
  std::string grid = "0.001,0.01,0.1,1,10";
  double search_init = 0.5;
  search_cmd->add_option("--seed", search_seed, "seed for init and subset");
  search_cmd->add_option("--budget", budget, "EGD iterations per candidate");
  search_cmd->add_option("--grid", grid, "comma list of candidate steps");
  search_cmd->add_option("--init-scale", search_init, "initial weights ~ U(-s, s)");

  // demo-counterexample
  auto* demo_cmd = app.add_subcommand("demo-counterexample",
                                      "mixed partials of the 1-1-1 network along z_eps");
  double w1 = 0.0, b1 = 0.0;
  demo_cmd->add_option("--w1", w1, "first-layer weight");
  demo_cmd->add_option("--b1", b1, "first-layer bias");
  demo_cmd->add_option("--config", "flat key=value file; its entries override flags");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*train_cmd) {
      spec.train.seed = seed;
      spec.train.mode = mode == "stochastic" ? TrainMode::Stochastic : TrainMode::Batch;
      if (mode != "batch" && mode != "stochastic")
        throw std::invalid_argument("--mode must be batch or stochastic");
      spec.optimizers.clear();
      for (const auto& o : split(optimizers, ',')) spec.optimizers.push_back(parse_optimizer(o));
      spec.output_dir = out_dir;
      fill_data(train_data, seed, spec);
      const ExperimentResult r = run_experiment(spec);
      for (const auto& f : r.runs)
        std::cout << f.run_id << " train_error=" << format_number(f.train.error)
                  << " train_accuracy=" << format_number(f.train.accuracy) << '\n';
      return 0;
    }
    if (*verify_cmd) return run_verify(verify_seed, trials, which, csv_path);
    if (*search_cmd) {
      ExperimentSpec s;
      s.train.seed = search_seed;
      fill_data(search_data, search_seed, s);
      const LoadedData d = load_experiment_data(s);
      std::mt19937_64 rng(search_seed);
      const NetworkParams init = NetworkParams::uniform(
          NetworkArch(s.sizes, s.activation, NormTag::Q2), rng, search_init);
      const std::vector<double> cands = parse_reals(grid);
      const StepSearchResult r = step_size_search(init, d.train, cands, budget, search_seed);
      std::cout << "step,final_error\n";
      for (std::size_t i = 0; i < r.candidates.size(); ++i)
        std::cout << format_number(r.candidates[i]) << ',' << format_number(r.final_errors[i])
                  << '\n';
      std::cout << "# selected " << format_number(r.step) << '\n';
      return 0;
    }
    if (*demo_cmd) {
      std::cout << "eps,E_w1w2,E_w1w2_fd,E_w1w2w2,E_w1w2w2_fd\n";
      for (double eps : {1.0, 10.0, 100.0, 1000.0}) {
        const CounterexamplePoint p = z_eps(w1, b1, eps);
        const CounterexampleDerivatives d = counterexample_derivatives(p);
        std::cout << format_number(eps) << ',' << format_number(d.E_w1w2) << ','
                  << format_number(fd_counterexample_w1w2(p)) << ','
                  << format_number(d.E_w1w2w2) << ','
                  << format_number(fd_counterexample_w1w2w2(p)) << '\n';
      }
      return 0;
    }
  } catch (const ExperimentAborted& e) {
    std::cerr << "aborted: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
