#ifndef MUSTREG_COMPENSATED_SUM_HPP
#define MUSTREG_COMPENSATED_SUM_HPP

#include <cmath>

#include <Eigen/Core>

namespace mustreg {

// Neumaier's variant of Kahan summation. Results depend only on the order of
// the added terms, so a fixed (sorted-index) order gives reproducible sums.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// Coordinate-wise compensated accumulator for gradients.
class CompensatedVector {
 public:
  explicit CompensatedVector(Eigen::Index n)
      : sum_(Eigen::VectorXd::Zero(n)), comp_(Eigen::VectorXd::Zero(n)) {}

  Eigen::Index size() const { return sum_.size(); }

  void add(Eigen::Index j, double v) {
    double& s = sum_[j];
    const double t = s + v;
    if (std::abs(s) >= std::abs(v)) {
      comp_[j] += (s - t) + v;
    } else {
      comp_[j] += (v - t) + s;
    }
    s = t;
  }

  void add(const Eigen::VectorXd& v) {
    for (Eigen::Index j = 0; j < v.size(); ++j) add(j, v[j]);
  }

  Eigen::VectorXd value() const { return sum_ + comp_; }

 private:
  Eigen::VectorXd sum_;
  Eigen::VectorXd comp_;
};

}  // namespace mustreg

#endif  // MUSTREG_COMPENSATED_SUM_HPP
