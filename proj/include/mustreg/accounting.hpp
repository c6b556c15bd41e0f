#ifndef MUSTREG_ACCOUNTING_HPP
#define MUSTREG_ACCOUNTING_HPP

#include <cstddef>
#include <vector>

#include "mustreg/dataset.hpp"
#include "mustreg/objective.hpp"

namespace mustreg {

enum class ChargeKind { kGradient, kFunction };

const char* to_string(ChargeKind k);

struct Charge {
  ChargeKind kind;
  std::size_t subset_size;
  double weight;
};

/// Weight of one evaluation on `subset_size` of `num_terms` samples in
/// dimension `dimension`: gradients cost |S|/N, function values (|S|/N)/n.
double charge_weight(ChargeKind kind, std::size_t subset_size, std::size_t num_terms,
                     std::size_t dimension);

/// Running count of weighted evaluations (#f/g) with an itemized ledger.
/// The total is the sequential sum of the ledger weights.
class EvalAccountant {
 public:
  EvalAccountant(std::size_t dimension, std::size_t num_terms);

  /// Throws InvalidCharge unless 1 <= subset_size <= N. Returns the new total.
  double charge(ChargeKind kind, std::size_t subset_size);

  double total() const { return total_; }
  const std::vector<Charge>& ledger() const { return ledger_; }
  std::size_t dimension() const { return dimension_; }
  std::size_t num_terms() const { return num_terms_; }

 private:
  std::size_t dimension_;
  std::size_t num_terms_;
  double total_ = 0.0;
  std::vector<Charge> ledger_;
};

/// Re-sums the first `count` ledger entries from their kinds and sizes alone.
double replay_ledger(const std::vector<Charge>& ledger, std::size_t count, std::size_t num_terms,
                     std::size_t dimension);

/// Objective handle that charges every evaluation to an accountant.
class MeteredObjective {
 public:
  MeteredObjective(const FiniteSumObjective& objective, EvalAccountant& accountant);

  double value(const SampleSet& samples, const Vector& x) const;
  Vector gradient(const SampleSet& samples, const Vector& x) const;
  /// Charged as one function and one gradient evaluation.
  ValueAndGradient value_and_gradient(const SampleSet& samples, const Vector& x) const;

  const FiniteSumObjective& objective() const { return objective_; }
  EvalAccountant& accountant() const { return accountant_; }
  std::size_t num_terms() const { return objective_.num_terms(); }
  Eigen::Index dimension() const { return objective_.dimension(); }

 private:
  const FiniteSumObjective& objective_;
  EvalAccountant& accountant_;
};

/// Percentage of rows whose predicted class sign(x'z) matches the mapped label;
/// x'z == 0 predicts the positive class.
double test_accuracy(const Vector& x, const Dataset& test_set);

}  // namespace mustreg

#endif  // MUSTREG_ACCOUNTING_HPP
