#ifndef MUSTREG_SOLVER_HPP
#define MUSTREG_SOLVER_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "mustreg/accounting.hpp"
#include "mustreg/hierarchy.hpp"
#include "mustreg/objective.hpp"
#include "mustreg/rng.hpp"
#include "mustreg/trace.hpp"

namespace mustreg {

enum class StepKind { kFine, kCoarse };

const char* to_string(StepKind k);

/// Which step each iteration of a level above the coarsest one attempts:
/// iteration j uses pattern[j % size], 'C' for a recursive call and 'F' for
/// a Taylor step. The coarsest level always takes Taylor steps.
struct RecursionSchedule {
  std::string pattern = "CF";

  StepKind choose(long long iteration) const;
  void validate() const;
};

/// What a recursive call returns when the iteration cap is reached before the
/// stopping condition holds: nothing (kStopCondition), or the cumulated step
/// provided it strictly decreased the lower model (kDecrease).
enum class CoarseReturn { kStopCondition, kDecrease };

const char* to_string(CoarseReturn r);
CoarseReturn coarse_return_from_string(const std::string& s);

struct SolverConfig {
  double eta1 = 0.5;
  double eta2 = 1e-3;
  double eta3 = 0.75;
  double gamma1 = 0.5;
  double gamma2 = 0.3;
  double gamma3 = 2.0;
  double lambda_min = 1e-4;
  double lambda0_single = 1e-3;   // outermost lambda when there is one level
  double lambda0_multi = 1e-4;    // outermost lambda when there are several
  double eps = 1e-3;
  double coarse_eps = 1e-3;
  int coarse_max_iterations = 5;
  long long max_fine_iterations = 10000;
  int levels = 3;
  /// |S^l| / p_k for l = 1 .. levels-1, non-decreasing and at most 1.
  std::vector<double> sample_fractions = {0.001, 0.01};
  double kappa_h = 0.1;
  RecursionSchedule schedule;
  CoarseReturn coarse_return = CoarseReturn::kDecrease;
  double budget = std::numeric_limits<double>::infinity();

  /// Throws InvalidConfig when a constant is out of range.
  void validate() const;

  double initial_lambda() const { return levels > 1 ? lambda0_multi : lambda0_single; }

  /// Fraction used to draw S^{level-1} from S^level.
  double relative_fraction(int level) const;

  nlohmann::json to_json() const;
};

/// s = -g / (lambda ||g||). Throws StationaryGradient when g = 0.
Vector fine_step(const Vector& g, double lambda);

/// Fine: -g's. Coarse: phi0 - phis. Throws DegenerateModelDecrease unless positive.
double predicted_decrease(StepKind kind, const Vector& g, const Vector& s, double phi0,
                          double phis);

/// (f_before - f_after) / pred. Throws DegenerateModelDecrease when pred <= 0.
double acceptance_ratio(double f_before, double f_after, double pred);

/// rho >= eta1 and ||g|| >= eta2 / lambda. A NaN rho is never successful.
bool is_successful(double rho, double grad_norm, double lambda, const SolverConfig& cfg);

double lambda_update(double lambda, double rho, double grad_norm, const SolverConfig& cfg);

/// min{N, max{100k + n + 2, ceil(lambda^2)}}, at least 1.
std::size_t sample_size(long long k, std::size_t n, double lambda, std::size_t num_terms);

enum class FineStop { kContinue, kResampleAndVerify, kStop };

const char* to_string(FineStop d);

/// Decision on the fine level's sampled gradient norm. In verification mode
/// the criterion stops regardless of the sample size.
FineStop fine_stopping(double grad_norm, std::size_t sample_size, std::size_t num_terms,
                       double eps, bool verifying = false);

enum class RunStatus { kConverged, kMaxIterations, kBudgetExceeded };

const char* to_string(RunStatus s);

struct SolveResult {
  Vector x;
  RunStatus status = RunStatus::kConverged;
  long long fine_iterations = 0;
  double final_grad_norm = 0.0;   // sampled gradient norm at the last check
  std::size_t final_sample_size = 0;
};

/// What a recursive call hands back. `step` is zero unless the cumulated step
/// meets the configured return rule.
struct CoarseResult {
  Vector step;
  Vector raw_step;           // cumulated step whether or not the condition holds
  bool stop_satisfied = false;
  int iterations = 0;
  double model_at_zero = 0.0;
  double model_at_step = 0.0;
  double grad_norm_at_step = 0.0;
};

/// The multilevel driver. One instance runs one solve; the accountant and
/// trace are owned by the caller.
class MultilevelSolver {
 public:
  using AccuracyMonitor = std::function<double(const Vector&)>;

  MultilevelSolver(const FiniteSumObjective& objective, SolverConfig config,
                   EvalAccountant& accountant, RunTrace& trace);

  /// Scores fine-level iterates; rows stay unscored without one.
  void set_accuracy_monitor(AccuracyMonitor monitor) { monitor_ = std::move(monitor); }
  void set_run_id(int run) { run_ = run; }
  void set_record_wall_time(bool on) { wall_time_ = on; }

  SolveResult solve(const Vector& x0, std::uint64_t seed);

  /// Minimizes `model` (level model.level()) from s = 0, starting at `lambda`.
  CoarseResult solve_coarse(const LevelModel& model, double lambda, const RngKey& key);

  const SolverConfig& config() const { return config_; }

 private:
  struct Attempt {
    StepKind kind = StepKind::kFine;
    Vector step;
    double predicted = kNotScored;
    double rho = kNotScored;
    bool accepted = false;
    double value_after = 0.0;
  };

  /// One iteration attempt on `model` at cumulated step `at`, where the model
  /// value is `value_at` and its gradient `g`.
  Attempt attempt(const LevelModel& model, const Vector& at, double value_at, const Vector& g,
                  double lambda, StepKind kind, const RngKey& key, long long iteration);

  StepKind choose_kind(int level, long long iteration, const Vector& g, bool fine_only) const;
  TraceRow make_row(int level, long long k, StepKind kind, std::size_t sample_size, double lambda,
                    double grad_norm, double objective) const;
  double elapsed_ms() const;

  const FiniteSumObjective& objective_;
  SolverConfig config_;
  EvalAccountant& accountant_;
  RunTrace& trace_;
  AccuracyMonitor monitor_;
  TransferOperator transfer_;
  int run_ = 0;
  bool wall_time_ = false;
  long long next_call_id_ = 1;
  long long current_call_id_ = 0;
  double start_ns_ = 0.0;
};

}  // namespace mustreg

#endif  // MUSTREG_SOLVER_HPP
