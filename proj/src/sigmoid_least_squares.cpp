#include "mustreg/sigmoid_least_squares.hpp"

#include <cmath>

#include "mustreg/errors.hpp"

namespace mustreg {

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

const char* to_string(SigmoidLossForm f) {
  return f == SigmoidLossForm::kMargin ? "margin" : "literal";
}

SigmoidLossForm sigmoid_loss_form_from_string(const std::string& s) {
  if (s == "margin") return SigmoidLossForm::kMargin;
  if (s == "literal") return SigmoidLossForm::kLiteral;
  throw InvalidConfig("unknown loss form '" + s + "'");
}

SigmoidLeastSquares::SigmoidLeastSquares(std::shared_ptr<const Dataset> data,
                                         SigmoidLossForm form)
    : data_(std::move(data)), form_(form) {
  if (!data_ || data_->num_samples() == 0) throw InvalidConfig("loss needs a non-empty dataset");
  if (data_->num_features() == 0) throw InvalidConfig("dataset has no features");
}

SigmoidLeastSquares::TermParts SigmoidLeastSquares::term_parts(std::size_t i,
                                                               const Vector& x) const {
  const double y = data_->label(i);
  const double sig = sigmoid(y * data_->row(i).dot(x));
  const double target = form_ == SigmoidLossForm::kMargin ? 1.0 : y;
  const double r = target - sig;
  // d/dt' of r^2/2 with t' = x'z: -r * sig * (1 - sig) * y
  return {r, -r * sig * (1.0 - sig) * y};
}

double SigmoidLeastSquares::term_value(std::size_t i, const Vector& x) const {
  const double r = term_parts(i, x).residual;
  return 0.5 * r * r;
}

double SigmoidLeastSquares::accumulate_term(std::size_t i, const Vector& x,
                                            CompensatedVector& grad) const {
  const TermParts p = term_parts(i, x);
  const auto row = data_->row(i);
  for (std::size_t k = 0; k < row.indices.size(); ++k) {
    grad.add(row.indices[k], p.slope * row.values[k]);
  }
  return 0.5 * p.residual * p.residual;
}

}  // namespace mustreg
