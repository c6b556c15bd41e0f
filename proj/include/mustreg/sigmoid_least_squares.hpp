#ifndef MUSTREG_SIGMOID_LEAST_SQUARES_HPP
#define MUSTREG_SIGMOID_LEAST_SQUARES_HPP

#include <memory>

#include "mustreg/dataset.hpp"
#include "mustreg/objective.hpp"

namespace mustreg {

/// 1 / (1 + exp(-t)), branching on the sign of t so exp never overflows.
double sigmoid(double t);

/// Which residual the least-squares loss squares, with t = y x'z:
///   kMargin:  f(x) = (1 - sigmoid(t))^2 / 2   (y in {-1, +1})
///   kLiteral: f(x) = (y - sigmoid(t))^2 / 2
/// kMargin equals (b - sigmoid(x'z))^2 / 2 with b = (1 + y) / 2 in {0, 1}.
/// kLiteral with y in {-1, +1} drives x'z to +inf for both classes.
enum class SigmoidLossForm { kMargin, kLiteral };

const char* to_string(SigmoidLossForm f);
SigmoidLossForm sigmoid_loss_form_from_string(const std::string& s);

/// Sigmoid least-squares classification loss over the rows of a Dataset.
class SigmoidLeastSquares final : public FiniteSumObjective {
 public:
  explicit SigmoidLeastSquares(std::shared_ptr<const Dataset> data,
                               SigmoidLossForm form = SigmoidLossForm::kMargin);

  std::size_t num_terms() const override { return data_->num_samples(); }
  Eigen::Index dimension() const override { return data_->num_features(); }
  double term_value(std::size_t i, const Vector& x) const override;
  double accumulate_term(std::size_t i, const Vector& x, CompensatedVector& grad) const override;

  const Dataset& data() const { return *data_; }
  SigmoidLossForm form() const { return form_; }

  /// Residual r_i and d f^(i) / d(x'z_i) at x.
  struct TermParts {
    double residual;
    double slope;
  };
  TermParts term_parts(std::size_t i, const Vector& x) const;

 private:
  std::shared_ptr<const Dataset> data_;
  SigmoidLossForm form_;
};

}  // namespace mustreg

#endif  // MUSTREG_SIGMOID_LEAST_SQUARES_HPP
