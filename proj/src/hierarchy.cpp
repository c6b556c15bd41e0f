#include "mustreg/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mustreg/errors.hpp"
#include "mustreg/rng.hpp"

namespace mustreg {

Vector TransferOperator::restrict_to_coarse(const Vector& fine) const {
  if (fine.size() != n_) throw DimensionError("restriction input has the wrong dimension");
  return fine;
}

Vector TransferOperator::prolong_to_fine(const Vector& coarse) const {
  if (coarse.size() != n_) throw DimensionError("prolongation input has the wrong dimension");
  return coarse;
}

LevelModel::LevelModel(const FiniteSumObjective& objective, SampleSet samples, Vector anchor,
                       int level, EvalAccountant* accountant)
    : objective_(&objective),
      samples_(std::move(samples)),
      anchor_(std::move(anchor)),
      level_(level),
      accountant_(accountant) {
  if (anchor_.size() != objective.dimension()) {
    throw DimensionError("model anchor has dimension " + std::to_string(anchor_.size()) +
                         ", objective has " + std::to_string(objective.dimension()));
  }
  if (samples_.indices().back() >= objective.num_terms()) {
    throw InvalidSampleSet("model sample index out of range");
  }
}

LevelModel LevelModel::top(const FiniteSumObjective& objective, SampleSet samples, Vector anchor,
                           int level, EvalAccountant* accountant) {
  return LevelModel(objective, std::move(samples), std::move(anchor), level, accountant);
}

ValueAndGradient LevelModel::evaluate(const Vector& s, std::size_t num_regularizations) const {
  if (s.size() != dimension()) {
    throw DimensionError("step has dimension " + std::to_string(s.size()) + ", model has " +
                         std::to_string(dimension()));
  }
  ValueAndGradient out = value_and_grad_subset(*objective_, samples_, anchor_ + s);
  if (accountant_ != nullptr) {
    accountant_->charge(ChargeKind::kFunction, samples_.size());
    accountant_->charge(ChargeKind::kGradient, samples_.size());
  }
  for (const auto& c : corrections_) {
    out.value += c.vector.dot(s);
    out.gradient += c.vector;
  }
  for (std::size_t j = 0; j < num_regularizations; ++j) {
    const auto& r = regularizations_[j];
    const Vector shifted = s + r.center;
    out.value += 0.5 * r.weight * shifted.squaredNorm();
    out.gradient += r.weight * shifted;
  }
  return out;
}

double LevelModel::value(const Vector& s) const {
  if (s.size() != dimension()) throw DimensionError("step has the wrong dimension");
  double v = eval_subset(*objective_, samples_, anchor_ + s);
  if (accountant_ != nullptr) accountant_->charge(ChargeKind::kFunction, samples_.size());
  for (const auto& c : corrections_) v += c.vector.dot(s);
  for (const auto& r : regularizations_) v += 0.5 * r.weight * (s + r.center).squaredNorm();
  return v;
}

Vector LevelModel::gradient(const Vector& s) const {
  if (s.size() != dimension()) throw DimensionError("step has the wrong dimension");
  Vector g = grad_subset(*objective_, samples_, anchor_ + s);
  if (accountant_ != nullptr) accountant_->charge(ChargeKind::kGradient, samples_.size());
  for (const auto& c : corrections_) g += c.vector;
  for (const auto& r : regularizations_) g += r.weight * (s + r.center);
  return g;
}

ValueAndGradient LevelModel::value_and_grad(const Vector& s) const {
  return evaluate(s, regularizations_.size());
}

ValueAndGradient LevelModel::unregularized_value_and_grad(const Vector& s) const {
  return evaluate(s, regularizations_.empty() ? 0 : regularizations_.size() - 1);
}

LevelModel LevelModel::subsampled_at(const Vector& at, SampleSet samples, int level) const {
  if (at.size() != dimension()) throw DimensionError("entry step has the wrong dimension");
  if (!samples.is_subset_of(samples_)) {
    throw InvalidSampleSet("lower sample set is not nested in the parent's");
  }
  LevelModel child(*objective_, std::move(samples), anchor_ + at, level, accountant_);
  // v'(at + t) differs from v't by a constant, so corrections carry over as is.
  child.corrections_ = corrections_;
  child.regularizations_ = regularizations_;
  for (auto& r : child.regularizations_) r.center += at;
  return child;
}

SampleSet draw_nested_subset(const SampleSet& parent, double fraction, std::mt19937_64& rng) {
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw InvalidConfig("nested subset fraction must lie in (0, 1]");
  }
  const int level = parent.level() - 1;
  if (fraction == 1.0) return SampleSet(parent.indices(), level);
  const double target = fraction * static_cast<double>(parent.size());
  // Ignore rounding noise such as 0.01 * 1000 = 10.000000000000002.
  auto count = static_cast<std::size_t>(std::ceil(target * (1.0 - 1e-12)));
  count = std::clamp<std::size_t>(count, 1, parent.size());
  std::vector<std::size_t> picked = sample_without_replacement(parent.size(), count, rng);
  for (auto& p : picked) p = parent[p];
  return SampleSet(std::move(picked), level);
}

Vector correction_vector(const Vector& upper_grad, const Vector& lower_grad_at_anchor) {
  if (upper_grad.size() != lower_grad_at_anchor.size()) {
    throw DimensionError("correction operands have different dimensions");
  }
  return upper_grad - lower_grad_at_anchor;
}

LevelModel make_lower_model(const LevelModel& parent, const Vector& at, SampleSet lower_samples,
                            const Vector& upper_grad, double weight, int lower_level) {
  if (!(weight >= 0.0)) throw InvalidConfig("regularization weight must be non-negative");
  LevelModel child = parent.subsampled_at(at, std::move(lower_samples), lower_level);
  const Vector lower_grad = child.gradient(Vector::Zero(parent.dimension()));
  child.corrections_.push_back(
      {correction_vector(upper_grad, lower_grad),
       "level " + std::to_string(lower_level) + " correction on " +
           std::to_string(child.samples().size()) + " samples"});
  child.regularizations_.push_back({weight, Vector::Zero(parent.dimension())});
  return child;
}

bool go_down_allowed(const Vector& restricted_grad, const Vector& grad, double kappa_h) {
  return restricted_grad.norm() >= kappa_h * grad.norm();
}

bool recursion_stop_satisfied(double value_at_zero, double value_at_s, double grad_norm_at_s,
                              double step_norm, double eps) {
  return value_at_s < value_at_zero && grad_norm_at_s <= eps * step_norm;
}

bool recursion_stop_satisfied(const LevelModel& model, const Vector& s, double eps) {
  const double m0 = model.value(Vector::Zero(model.dimension()));
  const ValueAndGradient ms = model.value_and_grad(s);
  return recursion_stop_satisfied(m0, ms.value, ms.gradient.norm(), s.norm(), eps);
}

}  // namespace mustreg
