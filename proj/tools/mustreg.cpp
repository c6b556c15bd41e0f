// Command-line experiment runner.
//
// Exit codes: 0 success, 2 parse error, 3 invalid configuration,
// 4 every run stopped on the budget, 1 anything else.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mustreg/errors.hpp"
#include "mustreg/experiment.hpp"

namespace {

constexpr int kExitParse = 2;
constexpr int kExitConfig = 3;
constexpr int kExitBudget = 4;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilevel stochastic regularized first-order experiments"};

  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;
  auto flag = [&](const std::string& name, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(
        name, [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); }, help);
  };

  app.add_option("--config", config_file, "Flat 'key = value' configuration file");
  flag("--dataset", "dataset", "Training data in LIBSVM format (.gz accepted)");
  flag("--test-set", "test_set", "Test data in LIBSVM format; otherwise the dataset is split");
  flag("--solver", "solver", "mu1, mu3, svrg or adagrad");
  flag("--runs", "runs", "Number of independent runs");
  flag("--seed", "seed", "Base seed; run r uses seed + r");
  flag("--eps", "eps", "Gradient-norm tolerance");
  flag("--budget", "budget", "Weighted evaluation budget (#f/g)");
  flag("--out", "out", "Output directory");
  flag("--synthetic", "synthetic", "Synthetic data N,n,margin,noise");
  flag("--train-size", "train_size", "Training rows when splitting one file");
  flag("--test-size", "test_size", "Test rows when splitting one file");
  flag("--test-fraction", "test_fraction", "Test share when no sizes are given");
  flag("--split-seed", "split_seed", "Seed of the train/test shuffle");
  flag("--label-mapping", "label_mapping", "signed, passthrough or even-odd");
  flag("--features", "features", "Declared number of features");
  flag("--loss-form", "loss_form", "margin or literal");
  flag("--jobs", "jobs", "Runs executed in parallel");
  bool minmax = false;
  bool wall_time = false;
  app.add_flag("--minmax", minmax, "Rescale features to [0, 1] with training ranges");
  app.add_flag("--wall-time", wall_time, "Record wall-clock times (output is then not reproducible)");
  std::vector<std::string> sets;
  app.add_option("--set", sets, "Extra 'key=value' settings, applied last");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    mustreg::ExperimentConfig config;
    if (!config_file.empty()) config.apply_file(config_file);
    for (const auto& [k, v] : overrides) config.set(k, v);
    if (minmax) config.minmax = true;
    if (wall_time) config.wall_time = true;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw mustreg::InvalidConfig("--set expects key=value");
      config.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (config.out.empty()) config.out = "out";

    const mustreg::ExperimentResult result = mustreg::run_experiment(config);
    std::cout << result.summary_json.dump(2) << '\n';
    for (const auto& r : result.runs) {
      if (!r.error.empty()) std::cerr << "run " << r.run << " failed: " << r.error << '\n';
    }
    return result.all_budget_exceeded ? kExitBudget : 0;
  } catch (const mustreg::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitParse;
  } catch (const mustreg::LabelError& e) {
    std::cerr << "label error: " << e.what() << '\n';
    return kExitParse;
  } catch (const mustreg::InvalidConfig& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
