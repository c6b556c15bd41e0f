#include "mustreg/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mustreg/errors.hpp"

namespace mustreg {

SampleSet::SampleSet(std::vector<std::size_t> indices, int level)
    : indices_(std::move(indices)), level_(level) {
  if (indices_.empty()) throw InvalidSampleSet("sample set is empty");
  if (!std::is_sorted(indices_.begin(), indices_.end())) {
    std::sort(indices_.begin(), indices_.end());
  }
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw InvalidSampleSet("sample set contains a repeated index");
  }
}

SampleSet SampleSet::full(std::size_t num_terms, int level) {
  std::vector<std::size_t> all(num_terms);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return SampleSet(std::move(all), level);
}

bool SampleSet::contains(std::size_t index) const {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

bool SampleSet::is_subset_of(const SampleSet& other) const {
  return std::includes(other.indices_.begin(), other.indices_.end(), indices_.begin(),
                       indices_.end());
}

TermwiseObjective::TermwiseObjective(std::size_t num_terms, Eigen::Index dimension, TermFn term)
    : num_terms_(num_terms), dimension_(dimension), term_(std::move(term)) {
  if (num_terms_ == 0 || dimension_ <= 0) throw InvalidConfig("empty finite sum");
}

double TermwiseObjective::term_value(std::size_t i, const Vector& x) const {
  return term_(i, x, nullptr);
}

double TermwiseObjective::accumulate_term(std::size_t i, const Vector& x,
                                          CompensatedVector& grad) const {
  Vector g(dimension_);
  const double v = term_(i, x, &g);
  grad.add(g);
  return v;
}

namespace {

void check_args(const FiniteSumObjective& obj, const SampleSet& samples, const Vector& x) {
  if (x.size() != obj.dimension()) {
    throw DimensionError("point has dimension " + std::to_string(x.size()) + ", expected " +
                         std::to_string(obj.dimension()));
  }
  if (samples.indices().back() >= obj.num_terms()) {
    throw InvalidSampleSet("sample index " + std::to_string(samples.indices().back()) +
                           " out of range for " + std::to_string(obj.num_terms()) + " terms");
  }
}

}  // namespace

double eval_subset(const FiniteSumObjective& obj, const SampleSet& samples, const Vector& x) {
  check_args(obj, samples, x);
  CompensatedSum sum;
  for (std::size_t i : samples.indices()) sum.add(obj.term_value(i, x));
  return sum.value() / static_cast<double>(samples.size());
}

Vector grad_subset(const FiniteSumObjective& obj, const SampleSet& samples, const Vector& x) {
  return value_and_grad_subset(obj, samples, x).gradient;
}

ValueAndGradient value_and_grad_subset(const FiniteSumObjective& obj, const SampleSet& samples,
                                       const Vector& x) {
  check_args(obj, samples, x);
  CompensatedSum sum;
  CompensatedVector grad(obj.dimension());
  for (std::size_t i : samples.indices()) sum.add(obj.accumulate_term(i, x, grad));
  const double inv = 1.0 / static_cast<double>(samples.size());
  return {sum.value() * inv, grad.value() * inv};
}

double fd_check(const FiniteSumObjective& obj, const SampleSet& samples, const Vector& x,
                double h) {
  if (!(h > 0.0)) throw InvalidConfig("finite-difference step must be positive");
  const Vector g = grad_subset(obj, samples, x);
  double worst = 0.0;
  Vector xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + h;
    const double fp = eval_subset(obj, samples, xp);
    xp[j] = x[j] - h;
    const double fm = eval_subset(obj, samples, xp);
    xp[j] = x[j];
    const double fd = (fp - fm) / (2.0 * h);
    const double scale = std::max({1.0, std::abs(g[j]), std::abs(fd)});
    worst = std::max(worst, std::abs(fd - g[j]) / scale);
  }
  return worst;
}

}  // namespace mustreg
