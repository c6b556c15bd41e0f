#include "mustreg/solver.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "mustreg/errors.hpp"

namespace mustreg {

const char* to_string(StepKind k) { return k == StepKind::kFine ? "fine" : "coarse"; }

StepKind RecursionSchedule::choose(long long iteration) const {
  const char c = pattern[static_cast<std::size_t>(iteration) % pattern.size()];
  return c == 'C' ? StepKind::kCoarse : StepKind::kFine;
}

void RecursionSchedule::validate() const {
  if (pattern.empty()) throw InvalidConfig("recursion schedule pattern is empty");
  for (char c : pattern) {
    if (c != 'C' && c != 'F') {
      throw InvalidConfig("recursion schedule pattern may only contain 'C' and 'F'");
    }
  }
}

const char* to_string(CoarseReturn r) {
  return r == CoarseReturn::kStopCondition ? "stop_condition" : "decrease";
}

CoarseReturn coarse_return_from_string(const std::string& s) {
  if (s == "stop_condition") return CoarseReturn::kStopCondition;
  if (s == "decrease") return CoarseReturn::kDecrease;
  throw InvalidConfig("unknown coarse return rule '" + s + "' (expected stop_condition or decrease)");
}

void SolverConfig::validate() const {
  if (!(0.0 < eta1 && eta1 <= eta3 && eta3 < 1.0)) {
    throw InvalidConfig("need 0 < eta1 <= eta3 < 1");
  }
  if (!(eta2 > 0.0)) throw InvalidConfig("need eta2 > 0");
  if (!(0.0 < gamma2 && gamma2 <= gamma1 && gamma1 < 1.0 && 1.0 < gamma3)) {
    throw InvalidConfig("need 0 < gamma2 <= gamma1 < 1 < gamma3");
  }
  if (!(lambda_min > 0.0)) throw InvalidConfig("need lambda_min > 0");
  if (!(lambda0_single > 0.0) || !(lambda0_multi > 0.0)) {
    throw InvalidConfig("initial lambda must be positive");
  }
  if (!(eps > 0.0) || !(coarse_eps > 0.0)) throw InvalidConfig("tolerances must be positive");
  if (coarse_max_iterations < 1) throw InvalidConfig("coarse iteration cap must be >= 1");
  if (max_fine_iterations < 1) throw InvalidConfig("fine iteration cap must be >= 1");
  if (levels < 1) throw InvalidConfig("need at least one level");
  if (levels > 1 && sample_fractions.size() != static_cast<std::size_t>(levels - 1)) {
    throw InvalidConfig("need " + std::to_string(levels - 1) + " sample fractions for " +
                        std::to_string(levels) + " levels");
  }
  double prev = 0.0;
  for (std::size_t j = 0; levels > 1 && j < sample_fractions.size(); ++j) {
    const double f = sample_fractions[j];
    if (!(f > 0.0) || f > 1.0 || f < prev) {
      throw InvalidConfig("sample fractions must be non-decreasing and lie in (0, 1]");
    }
    prev = f;
  }
  if (!(kappa_h > 0.0 && kappa_h < 1.0)) throw InvalidConfig("need 0 < kappa_h < 1");
  schedule.validate();
  if (!(budget > 0.0)) throw InvalidConfig("budget must be positive");
}

double SolverConfig::relative_fraction(int level) const {
  if (level < 2 || level > levels) throw InvalidConfig("no level below " + std::to_string(level));
  const double lower = sample_fractions[static_cast<std::size_t>(level - 2)];
  const double upper =
      level == levels ? 1.0 : sample_fractions[static_cast<std::size_t>(level - 1)];
  return lower / upper;
}

nlohmann::json SolverConfig::to_json() const {
  nlohmann::json j;
  j["eta1"] = eta1;
  j["eta2"] = eta2;
  j["eta3"] = eta3;
  j["gamma1"] = gamma1;
  j["gamma2"] = gamma2;
  j["gamma3"] = gamma3;
  j["lambda_min"] = lambda_min;
  j["lambda0"] = initial_lambda();
  j["eps"] = eps;
  j["coarse_eps"] = coarse_eps;
  j["coarse_max_iterations"] = coarse_max_iterations;
  j["max_fine_iterations"] = max_fine_iterations;
  j["levels"] = levels;
  j["sample_fractions"] = levels > 1 ? sample_fractions : std::vector<double>{};
  j["kappa_h"] = kappa_h;
  j["schedule"] = schedule.pattern;
  j["coarse_return"] = to_string(coarse_return);
  if (std::isfinite(budget)) {
    j["budget"] = budget;
  } else {
    j["budget"] = nullptr;
  }
  return j;
}

Vector fine_step(const Vector& g, double lambda) {
  const double norm = g.norm();
  if (norm == 0.0) throw StationaryGradient("fine step requested at a zero gradient");
  if (!(lambda > 0.0)) throw InvalidConfig("lambda must be positive");
  return -g / (lambda * norm);
}

double predicted_decrease(StepKind kind, const Vector& g, const Vector& s, double phi0,
                          double phis) {
  double pred;
  if (kind == StepKind::kFine) {
    if (g.size() != s.size()) throw DimensionError("gradient and step differ in dimension");
    pred = -g.dot(s);
  } else {
    pred = phi0 - phis;
  }
  if (!(pred > 0.0)) throw DegenerateModelDecrease("predicted decrease is not positive");
  return pred;
}

double acceptance_ratio(double f_before, double f_after, double pred) {
  if (!(pred > 0.0)) throw DegenerateModelDecrease("predicted decrease is not positive");
  return (f_before - f_after) / pred;
}

bool is_successful(double rho, double grad_norm, double lambda, const SolverConfig& cfg) {
  return rho >= cfg.eta1 && grad_norm >= cfg.eta2 / lambda;
}

double lambda_update(double lambda, double rho, double grad_norm, const SolverConfig& cfg) {
  if (!is_successful(rho, grad_norm, lambda, cfg)) return cfg.gamma3 * lambda;
  const double factor = rho >= cfg.eta3 ? cfg.gamma2 : cfg.gamma1;
  return std::max(cfg.lambda_min, factor * lambda);
}

std::size_t sample_size(long long k, std::size_t n, double lambda, std::size_t num_terms) {
  if (k < 0 || n < 1 || num_terms < 1) throw InvalidConfig("sample_size needs k >= 0, n, N >= 1");
  const double linear = 100.0 * static_cast<double>(k) + static_cast<double>(n) + 2.0;
  const double quadratic = std::ceil(lambda * lambda);
  const double p = std::min(static_cast<double>(num_terms), std::max(linear, quadratic));
  return std::max<std::size_t>(1, static_cast<std::size_t>(p));
}

const char* to_string(FineStop d) {
  switch (d) {
    case FineStop::kContinue:
      return "continue";
    case FineStop::kResampleAndVerify:
      return "resample_and_verify";
    case FineStop::kStop:
      return "stop";
  }
  return "?";
}

FineStop fine_stopping(double grad_norm, std::size_t sample_size, std::size_t num_terms,
                       double eps, bool verifying) {
  if (!(grad_norm <= eps)) return FineStop::kContinue;
  if (verifying || sample_size >= num_terms) return FineStop::kStop;
  return FineStop::kResampleAndVerify;
}

const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kConverged:
      return "converged";
    case RunStatus::kMaxIterations:
      return "max_iterations";
    case RunStatus::kBudgetExceeded:
      return "budget_exceeded";
  }
  return "?";
}

namespace {

double now_ns() {
  return static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                 std::chrono::steady_clock::now().time_since_epoch())
                                 .count());
}

SampleSet draw_sample(std::size_t count, std::size_t num_terms, int level, const RngKey& key) {
  auto rng = key.engine();
  return SampleSet(sample_without_replacement(num_terms, count, rng), level);
}

}  // namespace

MultilevelSolver::MultilevelSolver(const FiniteSumObjective& objective, SolverConfig config,
                                   EvalAccountant& accountant, RunTrace& trace)
    : objective_(objective),
      config_(std::move(config)),
      accountant_(accountant),
      trace_(trace),
      transfer_(TransferOperator::identity(objective.dimension())) {
  config_.validate();
  if (accountant.num_terms() != objective.num_terms() ||
      accountant.dimension() != static_cast<std::size_t>(objective.dimension())) {
    throw InvalidConfig("accountant and objective disagree on N or n");
  }
}

double MultilevelSolver::elapsed_ms() const {
  return wall_time_ ? (now_ns() - start_ns_) * 1e-6 : 0.0;
}

TraceRow MultilevelSolver::make_row(int level, long long k, StepKind kind,
                                    std::size_t sample_size, double lambda, double grad_norm,
                                    double objective) const {
  TraceRow r;
  r.run = run_;
  r.k = k;
  r.level = level;
  r.kind = kind == StepKind::kFine ? RowKind::kFine : RowKind::kCoarse;
  r.sample_size = sample_size;
  r.lambda = lambda;
  r.grad_norm = grad_norm;
  r.objective = objective;
  r.call_id = current_call_id_;
  return r;
}

StepKind MultilevelSolver::choose_kind(int level, long long iteration, const Vector& g,
                                       bool fine_only) const {
  if (fine_only || level <= 1) return StepKind::kFine;
  if (config_.schedule.choose(iteration) != StepKind::kCoarse) return StepKind::kFine;
  return go_down_allowed(transfer_.restrict_to_coarse(g), g, config_.kappa_h) ? StepKind::kCoarse
                                                                               : StepKind::kFine;
}

MultilevelSolver::Attempt MultilevelSolver::attempt(const LevelModel& model, const Vector& at,
                                                    double value_at, const Vector& g,
                                                    double lambda, StepKind kind,
                                                    const RngKey& key, long long iteration) {
  Attempt a;
  a.kind = kind;
  a.step = Vector::Zero(g.size());
  const double gnorm = g.norm();
  // Failing the gradient test settles the outcome, so the trial point is not evaluated.
  const bool hopeless = !(gnorm >= config_.eta2 / lambda);

  if (kind == StepKind::kFine) {
    a.step = fine_step(g, lambda);
    try {
      a.predicted = predicted_decrease(StepKind::kFine, g, a.step, 0.0, 0.0);
    } catch (const DegenerateModelDecrease&) {
      // ||g|| / lambda underflowed.
      return a;
    }
  } else {
    if (hopeless) return a;
    const int level = model.level();
    auto nested_rng = key.child(RngPurpose::kNestedSample, level, iteration).engine();
    SampleSet lower =
        draw_nested_subset(model.samples(), config_.relative_fraction(level), nested_rng);
    const double weight = lambda * gnorm;
    LevelModel child = make_lower_model(model, at, std::move(lower), g, weight, level - 1);
    const long long saved = current_call_id_;
    current_call_id_ = next_call_id_++;
    CoarseResult res =
        solve_coarse(child, lambda, key.child(RngPurpose::kRecursion, level, iteration));
    current_call_id_ = saved;
    if (res.step.isZero(0.0)) return a;
    a.step = res.step;
    const double phis = res.model_at_step - 0.5 * weight * res.step.squaredNorm();
    try {
      a.predicted = predicted_decrease(StepKind::kCoarse, g, a.step, res.model_at_zero, phis);
    } catch (const DegenerateModelDecrease&) {
      a.step.setZero();
      return a;
    }
  }
  if (hopeless) return a;

  a.value_after = model.value(at + a.step);
  a.rho = acceptance_ratio(value_at, a.value_after, a.predicted);
  a.accepted = is_successful(a.rho, gnorm, lambda, config_);
  return a;
}

CoarseResult MultilevelSolver::solve_coarse(const LevelModel& model, double lambda,
                                            const RngKey& key) {
  const int level = model.level();
  const Eigen::Index n = model.dimension();
  CoarseResult out;
  Vector s = Vector::Zero(n);
  ValueAndGradient cur = model.value_and_grad(s);
  out.model_at_zero = cur.value;
  double gnorm = cur.gradient.norm();

  int j = 0;
  for (; j < config_.coarse_max_iterations; ++j) {
    if (j > 0 && recursion_stop_satisfied(out.model_at_zero, cur.value, gnorm, s.norm(),
                                          config_.coarse_eps)) {
      break;
    }
    if (gnorm == 0.0) break;
    const StepKind kind = choose_kind(level, j, cur.gradient, false);
    TraceRow row = make_row(level, j, kind, model.samples().size(), lambda, gnorm, cur.value);
    Attempt a = attempt(model, s, cur.value, cur.gradient, lambda, kind, key, j);
    row.rho = a.rho;
    row.accepted = a.accepted;
    row.step_norm = a.step.norm();
    row.predicted_decrease = a.predicted;
    if (a.accepted) {
      s += a.step;
      cur.value = a.value_after;
      cur.gradient = model.gradient(s);
      gnorm = cur.gradient.norm();
      row.applied_step_norm = row.step_norm;
    }
    lambda = lambda_update(lambda, a.rho, row.grad_norm, config_);
    row.wfg_cumulative = accountant_.total();
    row.ledger_mark = accountant_.ledger().size();
    row.wall_ms = elapsed_ms();
    trace_.append(std::move(row));
  }

  out.iterations = j;
  out.raw_step = s;
  out.model_at_step = cur.value;
  out.grad_norm_at_step = gnorm;
  out.stop_satisfied =
      recursion_stop_satisfied(out.model_at_zero, cur.value, gnorm, s.norm(), config_.coarse_eps);
  const bool usable = out.stop_satisfied || (config_.coarse_return == CoarseReturn::kDecrease &&
                                              cur.value < out.model_at_zero);
  out.step = usable ? s : Vector::Zero(n);
  return out;
}

SolveResult MultilevelSolver::solve(const Vector& x0, std::uint64_t seed) {
  if (x0.size() != objective_.dimension()) throw DimensionError("x0 has the wrong dimension");
  start_ns_ = now_ns();
  const int top = config_.levels;
  const std::size_t N = objective_.num_terms();
  const auto n = static_cast<std::size_t>(objective_.dimension());
  const RngKey root(seed);

  SolveResult result;
  Vector x = x0;
  double lambda = config_.initial_lambda();
  bool verifying = false;
  current_call_id_ = 0;
  next_call_id_ = 1;

  long long k = 0;
  std::size_t p = 0;
  double gnorm = 0.0;
  double f0 = 0.0;
  for (;; ++k) {
    if (k >= config_.max_fine_iterations) {
      result.status = RunStatus::kMaxIterations;
      break;
    }
    if (accountant_.total() >= config_.budget) {
      result.status = RunStatus::kBudgetExceeded;
      break;
    }
    p = sample_size(k, n, lambda, N);
    LevelModel model = LevelModel::top(
        objective_, draw_sample(p, N, top, root.child(RngPurpose::kFineSample, top, k)), x, top,
        &accountant_);
    ValueAndGradient vg = model.value_and_grad(Vector::Zero(x.size()));
    gnorm = vg.gradient.norm();
    f0 = vg.value;

    const FineStop decision = fine_stopping(gnorm, p, N, config_.eps, verifying);
    if (decision == FineStop::kStop) break;
    if (decision == FineStop::kResampleAndVerify) {
      verifying = true;
      model = LevelModel::top(
          objective_, draw_sample(p, N, top, root.child(RngPurpose::kVerifySample, top, k)), x,
          top, &accountant_);
      vg = model.value_and_grad(Vector::Zero(x.size()));
      gnorm = vg.gradient.norm();
      f0 = vg.value;
      if (fine_stopping(gnorm, p, N, config_.eps, true) == FineStop::kStop) break;
    }

    const StepKind kind = choose_kind(top, k, vg.gradient, verifying);
    TraceRow row = make_row(top, k, kind, p, lambda, gnorm, f0);
    Attempt a = attempt(model, Vector::Zero(x.size()), f0, vg.gradient, lambda, kind, root, k);
    row.rho = a.rho;
    row.accepted = a.accepted;
    row.step_norm = a.step.norm();
    row.predicted_decrease = a.predicted;
    if (a.accepted) {
      x += a.step;
      row.applied_step_norm = row.step_norm;
    }
    lambda = lambda_update(lambda, a.rho, gnorm, config_);
    row.wfg_cumulative = accountant_.total();
    row.ledger_mark = accountant_.ledger().size();
    if (monitor_) row.test_acc = monitor_(x);
    row.wall_ms = elapsed_ms();
    trace_.append(std::move(row));
  }

  TraceRow stop;
  stop.run = run_;
  stop.k = k;
  stop.level = top;
  stop.kind = RowKind::kStop;
  stop.sample_size = p;
  stop.lambda = lambda;
  stop.grad_norm = gnorm;
  stop.objective = f0;
  stop.wfg_cumulative = accountant_.total();
  stop.ledger_mark = accountant_.ledger().size();
  if (monitor_) stop.test_acc = monitor_(x);
  stop.wall_ms = elapsed_ms();
  trace_.append(std::move(stop));
  trace_.ledger = accountant_.ledger();

  result.x = std::move(x);
  result.fine_iterations = k;
  result.final_grad_norm = gnorm;
  result.final_sample_size = p;
  return result;
}

}  // namespace mustreg
