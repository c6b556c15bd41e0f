#include "mustreg/accounting.hpp"

#include <string>

#include "mustreg/errors.hpp"

namespace mustreg {

const char* to_string(ChargeKind k) { return k == ChargeKind::kGradient ? "grad" : "func"; }

double charge_weight(ChargeKind kind, std::size_t subset_size, std::size_t num_terms,
                     std::size_t dimension) {
  const double fraction = static_cast<double>(subset_size) / static_cast<double>(num_terms);
  return kind == ChargeKind::kGradient ? fraction : fraction / static_cast<double>(dimension);
}

EvalAccountant::EvalAccountant(std::size_t dimension, std::size_t num_terms)
    : dimension_(dimension), num_terms_(num_terms) {
  if (dimension_ == 0 || num_terms_ == 0) throw InvalidConfig("accountant needs n >= 1 and N >= 1");
}

double EvalAccountant::charge(ChargeKind kind, std::size_t subset_size) {
  if (subset_size < 1 || subset_size > num_terms_) {
    throw InvalidCharge("subset size " + std::to_string(subset_size) + " outside [1, " +
                        std::to_string(num_terms_) + "]");
  }
  const double w = charge_weight(kind, subset_size, num_terms_, dimension_);
  ledger_.push_back({kind, subset_size, w});
  total_ += w;
  return total_;
}

double replay_ledger(const std::vector<Charge>& ledger, std::size_t count, std::size_t num_terms,
                     std::size_t dimension) {
  double total = 0.0;
  for (std::size_t k = 0; k < count && k < ledger.size(); ++k) {
    total += charge_weight(ledger[k].kind, ledger[k].subset_size, num_terms, dimension);
  }
  return total;
}

MeteredObjective::MeteredObjective(const FiniteSumObjective& objective, EvalAccountant& accountant)
    : objective_(objective), accountant_(accountant) {
  if (accountant.num_terms() != objective.num_terms() ||
      accountant.dimension() != static_cast<std::size_t>(objective.dimension())) {
    throw InvalidConfig("accountant and objective disagree on N or n");
  }
}

double MeteredObjective::value(const SampleSet& samples, const Vector& x) const {
  const double v = eval_subset(objective_, samples, x);
  accountant_.charge(ChargeKind::kFunction, samples.size());
  return v;
}

Vector MeteredObjective::gradient(const SampleSet& samples, const Vector& x) const {
  Vector g = grad_subset(objective_, samples, x);
  accountant_.charge(ChargeKind::kGradient, samples.size());
  return g;
}

ValueAndGradient MeteredObjective::value_and_gradient(const SampleSet& samples,
                                                      const Vector& x) const {
  ValueAndGradient vg = value_and_grad_subset(objective_, samples, x);
  accountant_.charge(ChargeKind::kFunction, samples.size());
  accountant_.charge(ChargeKind::kGradient, samples.size());
  return vg;
}

double test_accuracy(const Vector& x, const Dataset& test_set) {
  if (test_set.num_samples() == 0) throw InvalidConfig("test set is empty");
  if (x.size() < test_set.num_features()) {
    throw DimensionError("point dimension smaller than the test set's feature count");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test_set.num_samples(); ++i) {
    const double predicted = test_set.row(i).dot(x) >= 0.0 ? 1.0 : -1.0;
    if (predicted == test_set.label(i)) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test_set.num_samples());
}

}  // namespace mustreg
