#ifndef MUSTREG_HIERARCHY_HPP
#define MUSTREG_HIERARCHY_HPP

#include <random>
#include <string>
#include <vector>

#include "mustreg/accounting.hpp"
#include "mustreg/objective.hpp"

namespace mustreg {

/// Restriction R and prolongation P between two levels, with R = nu P^T and
/// nu = 1. Only the identity (hierarchy in the samples space) is provided.
class TransferOperator {
 public:
  enum class Kind { kIdentity };

  static TransferOperator identity(Eigen::Index n) { return TransferOperator(Kind::kIdentity, n); }

  Kind kind() const { return kind_; }
  Eigen::Index fine_dimension() const { return n_; }
  Eigen::Index coarse_dimension() const { return n_; }
  double nu() const { return 1.0; }

  Vector restrict_to_coarse(const Vector& fine) const;
  Vector prolong_to_fine(const Vector& coarse) const;

 private:
  TransferOperator(Kind kind, Eigen::Index n) : kind_(kind), n_(n) {}

  Kind kind_;
  Eigen::Index n_;
};

struct Correction {
  Vector vector;
  std::string description;
};

/// Contributes weight/2 * ||s + center||^2 to the model.
struct Regularization {
  double weight;
  Vector center;
};

/// Objective of one level of the recursion, as a function of the step s
/// taken from the level's entry point:
///
///   m(s) = f^S(anchor + s) + sum_j v_j's + sum_j w_j/2 ||s + c_j||^2
///
/// Each descent appends one correction and one regularization (centered at
/// the new entry point) and shifts the inherited centers. The model is
/// immutable after construction; evaluations are charged to the accountant
/// when one is attached.
class LevelModel {
 public:
  /// f^S(anchor + s) with nothing stacked on top: the fine level's sampled function.
  static LevelModel top(const FiniteSumObjective& objective, SampleSet samples, Vector anchor,
                        int level, EvalAccountant* accountant = nullptr);

  double value(const Vector& s) const;
  Vector gradient(const Vector& s) const;
  ValueAndGradient value_and_grad(const Vector& s) const;

  /// The model without its newest regularization term (phi). For a top model
  /// this is the model itself.
  ValueAndGradient unregularized_value_and_grad(const Vector& s) const;

  /// Same stacks and entry point as the child built at `at`, but evaluated on
  /// `samples` and without the new correction/regularization: [m]^samples(at + t).
  LevelModel subsampled_at(const Vector& at, SampleSet samples, int level) const;

  const FiniteSumObjective& base() const { return *objective_; }
  const SampleSet& samples() const { return samples_; }
  const Vector& anchor() const { return anchor_; }
  const std::vector<Correction>& corrections() const { return corrections_; }
  const std::vector<Regularization>& regularizations() const { return regularizations_; }
  int level() const { return level_; }
  Eigen::Index dimension() const { return anchor_.size(); }
  EvalAccountant* accountant() const { return accountant_; }

  /// Weight of the newest regularization (0 for a top model).
  double newest_weight() const {
    return regularizations_.empty() ? 0.0 : regularizations_.back().weight;
  }

 private:
  friend LevelModel make_lower_model(const LevelModel&, const Vector&, SampleSet, const Vector&,
                                     double, int);

  LevelModel(const FiniteSumObjective& objective, SampleSet samples, Vector anchor, int level,
             EvalAccountant* accountant);

  ValueAndGradient evaluate(const Vector& s, std::size_t num_regularizations) const;

  const FiniteSumObjective* objective_;
  SampleSet samples_;
  Vector anchor_;
  std::vector<Correction> corrections_;
  std::vector<Regularization> regularizations_;
  int level_;
  EvalAccountant* accountant_;
};

/// Uniform draw without replacement of max(1, ceil(fraction * |parent|))
/// indices of `parent`; fraction 1 returns the parent's indices. The result
/// carries level tag parent.level() - 1. Throws InvalidConfig unless
/// 0 < fraction <= 1.
SampleSet draw_nested_subset(const SampleSet& parent, double fraction, std::mt19937_64& rng);

/// v = upper_grad - lower_grad_at_anchor. Throws DimensionError on size mismatch.
Vector correction_vector(const Vector& upper_grad, const Vector& lower_grad_at_anchor);

/// Lower-level model of `parent` at step `at`, built on `lower_samples`:
///
///   m'(t) = [m]^{lower}(at + t) + v't + weight/2 ||t||^2,
///
/// with v = upper_grad - grad [m]^{lower}(at), so grad of the unregularized part
/// at t = 0 equals upper_grad. `upper_grad` must be the parent's gradient at `at`.
LevelModel make_lower_model(const LevelModel& parent, const Vector& at, SampleSet lower_samples,
                            const Vector& upper_grad, double weight, int lower_level);

/// ||R g|| >= kappa_h ||g||.
bool go_down_allowed(const Vector& restricted_grad, const Vector& grad, double kappa_h);

/// m(s) < m(0) and ||grad m(s)|| <= eps ||s||.
bool recursion_stop_satisfied(double value_at_zero, double value_at_s, double grad_norm_at_s,
                              double step_norm, double eps);

/// Same, evaluating the model (charges apply when an accountant is attached).
bool recursion_stop_satisfied(const LevelModel& model, const Vector& s, double eps);

}  // namespace mustreg

#endif  // MUSTREG_HIERARCHY_HPP
