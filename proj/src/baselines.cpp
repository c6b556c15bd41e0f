#include "mustreg/baselines.hpp"

#include <chrono>
#include <cmath>

#include "mustreg/errors.hpp"
#include "mustreg/rng.hpp"

namespace mustreg {

namespace {

class WallClock {
 public:
  explicit WallClock(bool on) : on_(on), start_(std::chrono::steady_clock::now()) {}
  double ms() const {
    if (!on_) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point start_;
};

SampleSet draw_batch(std::size_t batch, std::size_t num_terms, const RngKey& key) {
  auto rng = key.engine();
  return SampleSet(sample_without_replacement(num_terms, batch, rng), 0);
}

TraceRow baseline_row(const BaselineRun& run, RowKind kind, long long k, std::size_t size,
                      double grad_norm, const EvalAccountant& acc, const WallClock& clock) {
  TraceRow r;
  r.run = run.run;
  r.k = k;
  r.level = 1;
  r.kind = kind;
  r.sample_size = size;
  r.lambda = kNotScored;
  r.grad_norm = grad_norm;
  r.accepted = true;
  r.objective = kNotScored;
  r.wfg_cumulative = acc.total();
  r.ledger_mark = acc.ledger().size();
  r.wall_ms = clock.ms();
  return r;
}

}  // namespace

void SvrgConfig::validate(std::size_t num_terms) const {
  if (!(alpha > 0.0)) throw InvalidConfig("SVRG learning rate must be positive");
  if (batch < 1 || batch > num_terms) throw InvalidConfig("SVRG batch size must lie in [1, N]");
  if (inner_length(num_terms) < 1) throw InvalidConfig("SVRG inner loop length must be >= 1");
  if (max_iterations < 1) throw InvalidConfig("SVRG iteration cap must be >= 1");
  if (!(eps > 0.0)) throw InvalidConfig("SVRG tolerance must be positive");
  if (!(budget > 0.0)) throw InvalidConfig("budget must be positive");
}

std::size_t SvrgConfig::inner_length(std::size_t num_terms) const {
  return inner != 0 ? inner : num_terms / batch;
}

nlohmann::json SvrgConfig::to_json(std::size_t num_terms) const {
  nlohmann::json j;
  j["alpha"] = alpha;
  j["batch"] = batch;
  j["inner"] = inner_length(num_terms);
  j["max_iterations"] = max_iterations;
  j["eps"] = eps;
  j["snapshot"] = "last_inner_iterate";
  if (std::isfinite(budget)) {
    j["budget"] = budget;
  } else {
    j["budget"] = nullptr;
  }
  return j;
}

void AdagradConfig::validate(std::size_t num_terms) const {
  if (!(alpha > 0.0)) throw InvalidConfig("Adagrad stepsize must be positive");
  if (!(delta > 0.0)) throw InvalidConfig("Adagrad damping must be positive");
  if (batch < 1 || batch > num_terms) throw InvalidConfig("Adagrad batch size must lie in [1, N]");
  if (!(budget > 0.0) || !std::isfinite(budget)) {
    throw InvalidConfig("Adagrad needs a finite positive budget");
  }
  if (record_every < 1) throw InvalidConfig("record_every must be >= 1");
}

nlohmann::json AdagradConfig::to_json() const {
  nlohmann::json j;
  j["alpha"] = alpha;
  j["batch"] = batch;
  j["delta"] = delta;
  j["budget"] = budget;
  j["record_every"] = record_every;
  return j;
}

Vector svrg_direction(const MeteredObjective& objective, const SampleSet& batch, const Vector& x,
                      const Vector& snapshot, const Vector& mu) {
  Vector v = objective.gradient(batch, x);
  v -= objective.gradient(batch, snapshot);
  v += mu;
  return v;
}

Vector svrg_inner_update(const MeteredObjective& objective, const SampleSet& batch,
                         const Vector& x, const Vector& snapshot, const Vector& mu, double alpha) {
  return x - alpha * svrg_direction(objective, batch, x, snapshot, mu);
}

AdagradState adagrad_update(const Vector& x, const Vector& accumulator, const Vector& g,
                            double alpha, double delta) {
  if (x.size() != g.size() || accumulator.size() != g.size()) {
    throw DimensionError("Adagrad operands differ in dimension");
  }
  AdagradState next;
  next.accumulator = accumulator + g.cwiseProduct(g);
  next.x = x - alpha * g.cwiseQuotient((next.accumulator.cwiseSqrt().array() + delta).matrix());
  return next;
}

SolveResult run_svrg(const FiniteSumObjective& objective, const SvrgConfig& config,
                     EvalAccountant& accountant, RunTrace& trace, const Vector& x0,
                     std::uint64_t seed, const BaselineRun& run) {
  const std::size_t N = objective.num_terms();
  config.validate(N);
  if (x0.size() != objective.dimension()) throw DimensionError("x0 has the wrong dimension");
  const MeteredObjective metered(objective, accountant);
  const SampleSet full = SampleSet::full(N);
  const std::size_t m = config.inner_length(N);
  const RngKey root(seed);
  const WallClock clock(run.record_wall_time);

  SolveResult result;
  Vector snapshot = x0;
  double gnorm = 0.0;
  long long t = 0;
  for (;; ++t) {
    if (t >= config.max_iterations) {
      result.status = RunStatus::kMaxIterations;
      break;
    }
    if (accountant.total() >= config.budget) {
      result.status = RunStatus::kBudgetExceeded;
      break;
    }
    const Vector mu = metered.gradient(full, snapshot);
    gnorm = mu.norm();
    if (gnorm <= config.eps) {
      result.status = RunStatus::kConverged;
      break;
    }
    Vector x = snapshot;
    for (std::size_t i = 0; i < m; ++i) {
      const SampleSet batch = draw_batch(config.batch, N, root.child(RngPurpose::kBatch, t, i));
      x = svrg_inner_update(metered, batch, x, snapshot, mu, config.alpha);
    }
    snapshot = std::move(x);
    TraceRow row = baseline_row(run, RowKind::kSvrgEpoch, t, N, gnorm, accountant, clock);
    if (run.monitor) row.test_acc = run.monitor(snapshot);
    trace.append(std::move(row));
  }

  TraceRow stop = baseline_row(run, RowKind::kStop, t, N, gnorm, accountant, clock);
  stop.accepted = false;
  if (run.monitor) stop.test_acc = run.monitor(snapshot);
  trace.append(std::move(stop));
  trace.ledger = accountant.ledger();

  result.x = std::move(snapshot);
  result.fine_iterations = t;
  result.final_grad_norm = gnorm;
  result.final_sample_size = N;
  return result;
}

SolveResult run_adagrad(const FiniteSumObjective& objective, const AdagradConfig& config,
                        EvalAccountant& accountant, RunTrace& trace, const Vector& x0,
                        std::uint64_t seed, const BaselineRun& run) {
  const std::size_t N = objective.num_terms();
  config.validate(N);
  if (x0.size() != objective.dimension()) throw DimensionError("x0 has the wrong dimension");
  const MeteredObjective metered(objective, accountant);
  const RngKey root(seed);
  const WallClock clock(run.record_wall_time);

  AdagradState state{x0, Vector::Zero(x0.size())};
  double gnorm = 0.0;
  long long t = 0;
  for (; accountant.total() < config.budget; ++t) {
    const SampleSet batch = draw_batch(config.batch, N, root.child(RngPurpose::kBatch, 0, t));
    const Vector g = metered.gradient(batch, state.x);
    gnorm = g.norm();
    state = adagrad_update(state.x, state.accumulator, g, config.alpha, config.delta);
    if ((t + 1) % static_cast<long long>(config.record_every) == 0) {
      TraceRow row = baseline_row(run, RowKind::kAdagrad, t, config.batch, gnorm, accountant, clock);
      if (run.monitor) row.test_acc = run.monitor(state.x);
      trace.append(std::move(row));
    }
  }

  TraceRow stop = baseline_row(run, RowKind::kStop, t, config.batch, gnorm, accountant, clock);
  stop.accepted = false;
  if (run.monitor) stop.test_acc = run.monitor(state.x);
  trace.append(std::move(stop));
  trace.ledger = accountant.ledger();

  SolveResult result;
  // Spending the budget is Adagrad's only stopping rule, not a failure.
  result.status = RunStatus::kConverged;
  result.x = std::move(state.x);
  result.fine_iterations = t;
  result.final_grad_norm = gnorm;
  result.final_sample_size = config.batch;
  return result;
}

}  // namespace mustreg
