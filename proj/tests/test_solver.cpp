#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "mustreg/errors.hpp"
#include "mustreg/sigmoid_least_squares.hpp"
#include "mustreg/solver.hpp"
#include "support.hpp"

using namespace mustreg;
using namespace mustreg::testing;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

/// f^(1) = 1/2 ||x - a||^2, f^(2) = ||x - b||^2 in two dimensions.
std::shared_ptr<TermwiseObjective> convex_pair() {
  return std::make_shared<TermwiseObjective>(2, 2, [](std::size_t i, const Vector& x, Vector* g) {
    const Vector c = i == 0 ? Vector(Vector::Constant(2, 1.0)) : Vector(Vector::Constant(2, -2.0));
    const double w = i == 0 ? 0.5 : 1.0;
    if (g) *g = 2.0 * w * (x - c);
    return w * (x - c).squaredNorm();
  });
}

struct SolvedRun {
  RunTrace trace;
  SolveResult result;
};

SolvedRun solve_on(const FiniteSumObjective& obj, const SolverConfig& cfg, const Vector& x0,
                   std::uint64_t seed) {
  SolvedRun out;
  EvalAccountant acc(static_cast<std::size_t>(obj.dimension()), obj.num_terms());
  MultilevelSolver solver(obj, cfg, acc, out.trace);
  out.result = solver.solve(x0, seed);
  return out;
}

std::shared_ptr<SigmoidLeastSquares> synthetic_problem(std::size_t N, Eigen::Index n,
                                                       double noise, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.num_samples = N;
  spec.num_features = n;
  spec.margin = 0.5;
  spec.noise = noise;
  spec.seed = seed;
  return std::make_shared<SigmoidLeastSquares>(std::make_shared<Dataset>(make_synthetic(spec)));
}

/// Checks the per-row contracts of a multilevel trace. Rows of one recursive
/// call share a call id and appear in iteration order.
void check_trace_invariants(const RunTrace& trace, const SolverConfig& cfg) {
  std::map<long long, std::vector<const TraceRow*>> calls;
  for (const TraceRow& r : trace.rows) {
    if (r.kind == RowKind::kFine || r.kind == RowKind::kCoarse) calls[r.call_id].push_back(&r);
    CHECK(r.level >= 1);
    CHECK(r.level <= cfg.levels);
  }
  const std::size_t rows_checked = trace.rows.size();
  CHECK(rows_checked > 0);
  for (const auto& [id, rows] : calls) {
    if (id != 0) {
      CHECK(rows.size() <= static_cast<std::size_t>(cfg.coarse_max_iterations));
      CHECK(rows.front()->level < cfg.levels);
    } else {
      CHECK(rows.front()->level == cfg.levels);
    }
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const TraceRow& r = *rows[j];
      const bool rule = r.rho >= cfg.eta1 && r.grad_norm >= cfg.eta2 / r.lambda;
      CHECK(r.accepted == rule);
      CHECK((r.applied_step_norm > 0.0) == r.accepted);
      if (r.accepted) {
        CHECK(r.rho > 0.0);
        CHECK(r.predicted_decrease > 0.0);
      }
      if (r.kind == RowKind::kFine && r.step_norm > 0.0) {
        CHECK(rel(r.step_norm, 1.0 / r.lambda) <= 1e-12);
        CHECK(rel(r.predicted_decrease, r.grad_norm / r.lambda) <= 1e-12);
      }
      if (r.kind == RowKind::kCoarse && r.step_norm == 0.0) CHECK_FALSE(r.accepted);
      if (j + 1 < rows.size()) {
        const TraceRow& next = *rows[j + 1];
        const double l = r.lambda;
        const std::set<double> allowed{std::max(cfg.lambda_min, cfg.gamma2 * l),
                                       std::max(cfg.lambda_min, cfg.gamma1 * l), cfg.gamma3 * l};
        CHECK(allowed.count(next.lambda) == 1);
        CHECK(next.lambda == lambda_update(l, r.rho, r.grad_norm, cfg));
        if (!r.accepted) CHECK(next.lambda == cfg.gamma3 * l);
        // Within a recursive call the model is fixed, so its value at the
        // cumulated step drops exactly on accepted iterations.
        if (id != 0) {
          if (r.accepted) {
            CHECK(next.objective < r.objective);
          } else {
            CHECK(next.objective == r.objective);
          }
        }
      }
    }
  }
}

}  // namespace

TEST_CASE("fine step and its predicted decrease") {
  const Vector g = (Vector(2) << 3.0, 4.0).finished();
  const Vector s = fine_step(g, 2.0);
  CHECK(s[0] == doctest::Approx(-0.3).epsilon(1e-15));
  CHECK(s[1] == doctest::Approx(-0.4).epsilon(1e-15));
  CHECK(s.norm() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(predicted_decrease(StepKind::kFine, g, s, 0, 0) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK_THROWS_AS(fine_step(Vector::Zero(2), 2.0), StationaryGradient);
  CHECK_THROWS_AS(fine_step(g, 0.0), InvalidConfig);
}

TEST_CASE("coarse predicted decrease") {
  const Vector g = Vector::Ones(1);
  CHECK(predicted_decrease(StepKind::kCoarse, g, g, 1.0, 0.6) == doctest::Approx(0.4));
  CHECK_THROWS_AS(predicted_decrease(StepKind::kCoarse, g, g, 1.0, 1.0), DegenerateModelDecrease);
  CHECK_THROWS_AS(predicted_decrease(StepKind::kCoarse, g, g, 1.0, 1.5), DegenerateModelDecrease);
}

TEST_CASE("acceptance ratio") {
  CHECK(acceptance_ratio(3.0, 1.0, 2.0) == 1.0);
  CHECK(acceptance_ratio(10.0, 9.0, 2.0) == 0.5);
  CHECK(acceptance_ratio(1.0, 2.0, 1.0) < 0.0);
  CHECK_THROWS_AS(acceptance_ratio(1.0, 0.0, 0.0), DegenerateModelDecrease);
  const SolverConfig cfg;
  CHECK_FALSE(is_successful(acceptance_ratio(1.0, 2.0, 1.0), 100.0, 1.0, cfg));
  CHECK_FALSE(is_successful(std::nan(""), 100.0, 1.0, cfg));
  CHECK(is_successful(0.5, 1e-3, 1.0, cfg));
  CHECK_FALSE(is_successful(0.9, 0.99e-3, 1.0, cfg));
}

TEST_CASE("lambda update branches") {
  const SolverConfig cfg;
  CHECK(lambda_update(0.01, 0.8, 1e6, cfg) == doctest::Approx(0.003).epsilon(1e-15));
  CHECK(lambda_update(2e-4, 0.6, 1e6, cfg) == 1e-4);
  CHECK(lambda_update(0.01, 0.4, 1e6, cfg) == 0.02);
  // A gradient too small for the current lambda fails whatever rho is.
  CHECK(lambda_update(0.01, 0.9, 1e-3, cfg) == 0.02);
}

TEST_CASE("sample schedule") {
  CHECK(sample_size(0, 112, 1e-4, 6503) == 114);
  CHECK(sample_size(100, 112, 1.0, 6503) == 6503);
  CHECK(sample_size(0, 112, 1e-4, 50) == 50);
  CHECK(sample_size(0, 2, 30.5, 10000) == 931);   // ceil(930.25)
  CHECK_THROWS_AS(sample_size(-1, 2, 1.0, 10), InvalidConfig);
}

TEST_CASE("fine stopping decisions") {
  CHECK(fine_stopping(5e-4, 100, 100, 1e-3) == FineStop::kStop);
  CHECK(fine_stopping(5e-4, 50, 100, 1e-3) == FineStop::kResampleAndVerify);
  CHECK(fine_stopping(5e-4, 50, 100, 1e-3, true) == FineStop::kStop);
  CHECK(fine_stopping(0.1, 100, 100, 1e-3) == FineStop::kContinue);
  CHECK(fine_stopping(0.1, 50, 100, 1e-3, true) == FineStop::kContinue);
}

TEST_CASE("recursion schedule and configuration checks") {
  RecursionSchedule sch{"CFF"};
  CHECK(sch.choose(0) == StepKind::kCoarse);
  CHECK(sch.choose(1) == StepKind::kFine);
  CHECK(sch.choose(3) == StepKind::kCoarse);
  CHECK_THROWS_AS(RecursionSchedule{"CX"}.validate(), InvalidConfig);
  CHECK_THROWS_AS(RecursionSchedule{""}.validate(), InvalidConfig);

  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.initial_lambda() == 1e-4);
  CHECK(cfg.relative_fraction(3) == doctest::Approx(0.01));
  CHECK(cfg.relative_fraction(2) == doctest::Approx(0.1));
  cfg.levels = 1;
  CHECK(cfg.initial_lambda() == 1e-3);
  CHECK_NOTHROW(cfg.validate());

  auto bad = [](auto mutate) {
    SolverConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
  };
  bad([](SolverConfig& c) { c.eta1 = 0.9; });
  bad([](SolverConfig& c) { c.gamma3 = 1.0; });
  bad([](SolverConfig& c) { c.gamma2 = 0.6; });
  bad([](SolverConfig& c) { c.levels = 0; });
  bad([](SolverConfig& c) { c.sample_fractions = {0.01}; });
  bad([](SolverConfig& c) { c.sample_fractions = {0.1, 0.01}; });
  bad([](SolverConfig& c) { c.kappa_h = 0.0; });
  bad([](SolverConfig& c) { c.coarse_max_iterations = 0; });
  bad([](SolverConfig& c) { c.budget = 0.0; });

  CHECK(coarse_return_from_string("decrease") == CoarseReturn::kDecrease);
  CHECK(coarse_return_from_string("stop_condition") == CoarseReturn::kStopCondition);
  CHECK_THROWS_AS(coarse_return_from_string("x"), InvalidConfig);
}

TEST_CASE("single level on a strongly convex pair reaches the tolerance") {
  auto obj = convex_pair();
  SolverConfig cfg;
  cfg.levels = 1;
  const SolvedRun run = solve_on(*obj, cfg, Vector::Constant(2, 5.0), 7);
  CHECK(run.result.status == RunStatus::kConverged);
  const Vector g = grad_subset(*obj, SampleSet::full(2), run.result.x);
  CHECK(g.norm() <= 1e-3);
  // The minimizer of 1/2 ||x - 1||^2 + ||x + 2||^2 is x = -1.
  CHECK((run.result.x + Vector::Ones(2)).norm() <= 1e-3);
  CHECK(run.trace.rows.back().kind == RowKind::kStop);
}

TEST_CASE("coarse call with only unsuccessful iterations returns a zero step") {
  std::mt19937_64 rng(3);
  const RandomSum sum = random_sum(20, 3, rng);
  auto obj = sum.objective();
  EvalAccountant acc(3, 20);
  RunTrace trace;
  SolverConfig cfg;
  MultilevelSolver solver(*obj, cfg, acc, trace);
  const LevelModel top = LevelModel::top(*obj, SampleSet::full(20, 2), random_vector(3, rng), 2);
  const Vector g = top.gradient(Vector::Zero(3));
  const LevelModel child = make_lower_model(top, Vector::Zero(3),
                                            SampleSet(iota_indices(5), 1), g, 1e-9 * g.norm(), 1);
  // With lambda this small no iteration passes the gradient test.
  const CoarseResult res = solver.solve_coarse(child, 1e-9, RngKey(1));
  CHECK(res.step.isZero(0.0));
  CHECK(res.iterations == cfg.coarse_max_iterations);
  for (const TraceRow& r : trace.rows) CHECK_FALSE(r.accepted);
}

TEST_CASE("coarse return contract is re-verified post hoc") {
  std::mt19937_64 rng(12);
  int nonzero = 0;
  for (auto rule : {CoarseReturn::kStopCondition, CoarseReturn::kDecrease}) {
    for (int trial = 0; trial < 60; ++trial) {
      const RandomStack st = random_stack(rng, 1);
      const LevelModel& m = st.models.back();
      EvalAccountant acc(static_cast<std::size_t>(m.dimension()), st.objective->num_terms());
      RunTrace trace;
      SolverConfig cfg;
      cfg.coarse_return = rule;
      cfg.coarse_max_iterations = 20;
      cfg.coarse_eps = 0.5;
      MultilevelSolver solver(*st.objective, cfg, acc, trace);
      const double lambda = std::pow(10.0, std::uniform_real_distribution<double>(-1, 1)(rng));
      const CoarseResult res = solver.solve_coarse(m, lambda, RngKey(trial));
      const Vector zero = Vector::Zero(m.dimension());
      if (res.step.isZero(0.0)) continue;
      ++nonzero;
      CHECK(m.value(res.step) < m.value(zero));
      if (rule == CoarseReturn::kStopCondition) {
        CHECK(recursion_stop_satisfied(m, res.step, cfg.coarse_eps));
      }
      const double w = m.newest_weight();
      const double phi0 = m.unregularized_value_and_grad(zero).value;
      const double phis = m.unregularized_value_and_grad(res.step).value;
      CHECK(phis - phi0 <= -0.5 * w * res.step.squaredNorm() + 1e-10);
      CHECK(res.model_at_step == doctest::Approx(m.value(res.step)).epsilon(1e-12));
    }
  }
  CHECK(nonzero > 20);
}

TEST_CASE("multilevel trace invariants") {
  auto obj = synthetic_problem(3000, 12, 0.05, 21);
  for (auto rule : {CoarseReturn::kDecrease, CoarseReturn::kStopCondition}) {
    SolverConfig cfg;
    cfg.coarse_return = rule;
    cfg.sample_fractions = {0.05, 0.2};
    const SolvedRun run = solve_on(*obj, cfg, Vector::Zero(12), 5);
    check_trace_invariants(run.trace, cfg);
    long long coarse_rows = 0, zero_returns = 0;
    for (const TraceRow& r : run.trace.rows) {
      if (r.kind == RowKind::kCoarse && r.level == cfg.levels) {
        ++coarse_rows;
        if (r.step_norm == 0.0) ++zero_returns;
      }
    }
    CHECK(coarse_rows > 0);
    CHECK(zero_returns > 0);
  }
}

TEST_CASE("single level trace invariants") {
  auto obj = synthetic_problem(2000, 8, 0.1, 22);
  SolverConfig cfg;
  cfg.levels = 1;
  const SolvedRun run = solve_on(*obj, cfg, Vector::Zero(8), 9);
  check_trace_invariants(run.trace, cfg);
  for (const TraceRow& r : run.trace.rows) {
    CHECK(r.level == 1);
    CHECK(r.kind != RowKind::kCoarse);
  }
}

TEST_CASE("identical seeds give identical traces") {
  auto obj = synthetic_problem(1500, 10, 0.05, 23);
  SolverConfig cfg;
  const SolvedRun a = solve_on(*obj, cfg, Vector::Zero(10), 42);
  const SolvedRun b = solve_on(*obj, cfg, Vector::Zero(10), 42);
  REQUIRE(a.trace.rows.size() == b.trace.rows.size());
  for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
    CHECK(trace_csv_line(a.trace.rows[i]) == trace_csv_line(b.trace.rows[i]));
    CHECK(a.trace.rows[i].step_norm == b.trace.rows[i].step_norm);
  }
  CHECK(a.result.x == b.result.x);
  const SolvedRun c = solve_on(*obj, cfg, Vector::Zero(10), 43);
  CHECK_FALSE(c.result.x == a.result.x);
}

TEST_CASE("budget and iteration caps stop the solver") {
  auto obj = synthetic_problem(1000, 10, 0.05, 24);
  SolverConfig cfg;
  cfg.budget = 0.5;
  const SolvedRun b = solve_on(*obj, cfg, Vector::Zero(10), 1);
  CHECK(b.result.status == RunStatus::kBudgetExceeded);
  CHECK(b.trace.final_wfg() >= 0.5);
  CHECK(b.trace.rows.back().kind == RowKind::kStop);

  SolverConfig capped;
  capped.max_fine_iterations = 3;
  const SolvedRun c = solve_on(*obj, capped, Vector::Zero(10), 1);
  CHECK(c.result.status == RunStatus::kMaxIterations);
  CHECK(c.result.fine_iterations == 3);

  EvalAccountant acc(10, 1000);
  RunTrace trace;
  MultilevelSolver solver(*obj, SolverConfig{}, acc, trace);
  CHECK_THROWS_AS(solver.solve(Vector::Zero(3), 1), DimensionError);
  EvalAccountant wrong(10, 999);
  CHECK_THROWS_AS(MultilevelSolver(*obj, SolverConfig{}, wrong, trace), InvalidConfig);
}

TEST_CASE("the trace ledger accounts for every charge") {
  auto obj = synthetic_problem(1000, 10, 0.05, 25);
  const SolvedRun run = solve_on(*obj, SolverConfig{}, Vector::Zero(10), 3);
  for (const TraceRow& r : run.trace.rows) {
    CHECK(replay_ledger(run.trace.ledger, r.ledger_mark, 1000, 10) == r.wfg_cumulative);
  }
}
