#ifndef MUSTREG_BASELINES_HPP
#define MUSTREG_BASELINES_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>

#include <json.hpp>

#include "mustreg/accounting.hpp"
#include "mustreg/objective.hpp"
#include "mustreg/solver.hpp"
#include "mustreg/trace.hpp"

namespace mustreg {

struct SvrgConfig {
  double alpha = 0.01;
  std::size_t batch = 20;
  /// Inner loop length; 0 means N / batch.
  std::size_t inner = 0;
  /// Cap on outer iterations (full-gradient snapshots).
  long long max_iterations = 10000;
  double eps = 1e-3;
  double budget = std::numeric_limits<double>::infinity();

  void validate(std::size_t num_terms) const;
  std::size_t inner_length(std::size_t num_terms) const;
  nlohmann::json to_json(std::size_t num_terms) const;
};

struct AdagradConfig {
  double alpha = 0.01;
  std::size_t batch = 20;
  double delta = 1e-8;
  double budget = 100.0;
  /// Iterations between two trace rows.
  std::size_t record_every = 1;

  void validate(std::size_t num_terms) const;
  nlohmann::json to_json() const;
};

/// Variance-reduced direction grad f^B(x) - grad f^B(snapshot) + mu, with the
/// two batch gradients charged to `accountant`.
Vector svrg_direction(const MeteredObjective& objective, const SampleSet& batch, const Vector& x,
                      const Vector& snapshot, const Vector& mu);

/// x - alpha * svrg_direction(...).
Vector svrg_inner_update(const MeteredObjective& objective, const SampleSet& batch,
                         const Vector& x, const Vector& snapshot, const Vector& mu, double alpha);

struct AdagradState {
  Vector x;
  Vector accumulator;
};

/// G' = G + g*g, x' = x - alpha g / (sqrt(G') + delta), componentwise.
AdagradState adagrad_update(const Vector& x, const Vector& accumulator, const Vector& g,
                            double alpha, double delta);

using AccuracyMonitor = std::function<double(const Vector&)>;

struct BaselineRun {
  int run = 0;
  bool record_wall_time = false;
  AccuracyMonitor monitor;
};

/// One row per outer iteration; stops on a full-gradient norm <= eps, the
/// iteration cap, or the budget.
SolveResult run_svrg(const FiniteSumObjective& objective, const SvrgConfig& config,
                     EvalAccountant& accountant, RunTrace& trace, const Vector& x0,
                     std::uint64_t seed, const BaselineRun& run = {});

/// Runs until the budget is spent.
SolveResult run_adagrad(const FiniteSumObjective& objective, const AdagradConfig& config,
                        EvalAccountant& accountant, RunTrace& trace, const Vector& x0,
                        std::uint64_t seed, const BaselineRun& run = {});

}  // namespace mustreg

#endif  // MUSTREG_BASELINES_HPP
