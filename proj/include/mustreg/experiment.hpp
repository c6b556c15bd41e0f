#ifndef MUSTREG_EXPERIMENT_HPP
#define MUSTREG_EXPERIMENT_HPP

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mustreg/baselines.hpp"
#include "mustreg/dataset.hpp"
#include "mustreg/sigmoid_least_squares.hpp"
#include "mustreg/solver.hpp"
#include "mustreg/trace.hpp"

namespace mustreg {

enum class SolverKind { kMu1, kMu3, kSvrg, kAdagrad };

const char* to_string(SolverKind s);
SolverKind solver_kind_from_string(const std::string& s);

struct ExperimentConfig {
  std::string dataset;
  std::string test_set;
  std::optional<SyntheticSpec> synthetic;
  SolverKind solver = SolverKind::kMu3;
  int runs = 5;
  std::uint64_t seed = 1;
  double eps = 1e-3;
  double budget = std::numeric_limits<double>::infinity();
  std::string out;

  LabelMapping label_mapping = LabelMapping::kSigned;
  Eigen::Index declared_features = 0;
  SigmoidLossForm loss_form = SigmoidLossForm::kMargin;
  bool minmax = false;
  /// Split of a single data file: explicit sizes win over the fraction.
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  double test_fraction = 0.2;
  std::uint64_t split_seed = 0;

  bool wall_time = false;
  int jobs = 1;

  SolverConfig solver_config;
  SvrgConfig svrg;
  AdagradConfig adagrad;

  /// Applies one `key = value` setting; throws InvalidConfig on unknown keys
  /// or unparsable values.
  void set(const std::string& key, const std::string& value);

  /// Reads `key = value` lines; '#' starts a comment. Throws ParseError.
  void apply_file(std::istream& in);
  void apply_file(const std::string& path);

  void validate() const;

  /// Solver constants with the experiment-level settings folded in.
  SolverConfig effective_solver_config() const;
  SvrgConfig effective_svrg_config() const;
  AdagradConfig effective_adagrad_config() const;

  nlohmann::json to_json() const;
};

/// Parses "N,n,margin,noise"; the seed comes from the experiment.
SyntheticSpec parse_synthetic_spec(const std::string& text);

struct PreparedData {
  std::shared_ptr<const Dataset> train;
  std::shared_ptr<const Dataset> test;
  nlohmann::json description;
};

/// Loads or generates the training and test sets of an experiment.
PreparedData prepare_data(const ExperimentConfig& config);

struct RunOutcome {
  int run = 0;
  std::uint64_t seed = 0;
  RunTrace trace;
  SolveResult result;
  double full_grad_norm = 0.0;   // ||grad F|| at the returned point (not charged)
  std::string error;
};

struct Summary {
  std::string solver;
  std::string dataset;
  int runs = 0;
  double mean_ta = 0.0;
  double std_ta = 0.0;
  double mean_wfg = 0.0;
  double std_wfg = 0.0;
  std::vector<double> ta;
  std::vector<double> wfg;
};

/// Per run: %tA = the largest scored test accuracy, #f/g = the total at
/// termination. Population statistics. Throws InvalidConfig on empty input.
Summary summarize(const std::vector<RunTrace>& traces);

struct ExperimentResult {
  std::vector<RunOutcome> runs;
  Summary summary;
  nlohmann::json summary_json;
  bool all_budget_exceeded = false;
};

/// Standard normal initial point for run seed `seed`.
Vector initial_point(Eigen::Index n, std::uint64_t seed);

/// Runs config.runs independent runs with seeds seed + r. When config.out is
/// set, writes run_<r>.csv, run_<r>.ledger.csv, run_<r>.json and summary.json.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Same on already prepared data.
ExperimentResult run_experiment(const ExperimentConfig& config, const PreparedData& data);

}  // namespace mustreg

#endif  // MUSTREG_EXPERIMENT_HPP
