#ifndef MUSTREG_OBJECTIVE_HPP
#define MUSTREG_OBJECTIVE_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Core>

#include "mustreg/compensated_sum.hpp"

namespace mustreg {

using Vector = Eigen::VectorXd;

/// A non-empty set of distinct term indices, stored sorted. The level tag
/// records which level of the hierarchy drew it (0 when not applicable).
class SampleSet {
 public:
  /// Sorts `indices`; throws InvalidSampleSet when empty or when an index repeats.
  explicit SampleSet(std::vector<std::size_t> indices, int level = 0);

  static SampleSet full(std::size_t num_terms, int level = 0);

  const std::vector<std::size_t>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  int level() const { return level_; }
  std::size_t operator[](std::size_t k) const { return indices_[k]; }

  bool contains(std::size_t index) const;
  bool is_subset_of(const SampleSet& other) const;

  friend bool operator==(const SampleSet& a, const SampleSet& b) {
    return a.indices_ == b.indices_;
  }

 private:
  std::vector<std::size_t> indices_;
  int level_;
};

struct ValueAndGradient {
  double value;
  Vector gradient;
};

/// F(x) = (1/N) sum_i f^(i)(x). Implementations are immutable and safe to
/// evaluate concurrently.
class FiniteSumObjective {
 public:
  virtual ~FiniteSumObjective() = default;

  virtual std::size_t num_terms() const = 0;
  virtual Eigen::Index dimension() const = 0;

  virtual double term_value(std::size_t i, const Vector& x) const = 0;

  /// Returns f^(i)(x) and accumulates its gradient into `grad`.
  virtual double accumulate_term(std::size_t i, const Vector& x, CompensatedVector& grad) const = 0;
};

/// Finite sum given by a per-term callback `(i, x, grad_or_null) -> value`.
/// When the gradient pointer is non-null the callback must overwrite it.
class TermwiseObjective final : public FiniteSumObjective {
 public:
  using TermFn = std::function<double(std::size_t, const Vector&, Vector*)>;

  TermwiseObjective(std::size_t num_terms, Eigen::Index dimension, TermFn term);

  std::size_t num_terms() const override { return num_terms_; }
  Eigen::Index dimension() const override { return dimension_; }
  double term_value(std::size_t i, const Vector& x) const override;
  double accumulate_term(std::size_t i, const Vector& x, CompensatedVector& grad) const override;

 private:
  std::size_t num_terms_;
  Eigen::Index dimension_;
  TermFn term_;
};

/// (1/|S|) sum_{i in S} f^(i)(x). Throws InvalidSampleSet for indices >= N and
/// DimensionError when x has the wrong size.
double eval_subset(const FiniteSumObjective& obj, const SampleSet& samples, const Vector& x);

/// (1/|S|) sum_{i in S} grad f^(i)(x).
Vector grad_subset(const FiniteSumObjective& obj, const SampleSet& samples, const Vector& x);

/// Both of the above in one pass over the samples.
ValueAndGradient value_and_grad_subset(const FiniteSumObjective& obj, const SampleSet& samples,
                                       const Vector& x);

/// Largest per-coordinate discrepancy between grad_subset and a central
/// difference of eval_subset with step h, measured as
/// |fd_j - g_j| / max(1, |g_j|, |fd_j|).
double fd_check(const FiniteSumObjective& obj, const SampleSet& samples, const Vector& x, double h);

}  // namespace mustreg

#endif  // MUSTREG_OBJECTIVE_HPP
