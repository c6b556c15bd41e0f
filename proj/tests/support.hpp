#ifndef MUSTREG_TESTS_SUPPORT_HPP
#define MUSTREG_TESTS_SUPPORT_HPP

// Shared fixtures for the test binaries.

#include <cmath>
#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mustreg/dataset.hpp"
#include "mustreg/hierarchy.hpp"
#include "mustreg/objective.hpp"
#include "mustreg/rng.hpp"

namespace mustreg::testing {

/// f^(i)(x) = 1/2 sum_j a_ij x_j^2 + b_i'x + c_i sin(d_i'x): smooth, non-convex
/// for large c, with a hand-written gradient that does not share code with
/// the library.
struct RandomSum {
  std::vector<Vector> a, b, d;
  std::vector<double> c;

  std::shared_ptr<TermwiseObjective> objective() const {
    const RandomSum self = *this;
    const auto n = a.front().size();
    return std::make_shared<TermwiseObjective>(
        a.size(), n, [self](std::size_t i, const Vector& x, Vector* g) {
          const double t = self.d[i].dot(x);
          const double v = 0.5 * self.a[i].dot(x.cwiseProduct(x)) + self.b[i].dot(x) +
                           self.c[i] * std::sin(t);
          if (g) *g = self.a[i].cwiseProduct(x) + self.b[i] + self.c[i] * std::cos(t) * self.d[i];
          return v;
        });
  }

  double term(std::size_t i, const Vector& x) const {
    return 0.5 * a[i].dot(x.cwiseProduct(x)) + b[i].dot(x) + c[i] * std::sin(d[i].dot(x));
  }
  Vector term_grad(std::size_t i, const Vector& x) const {
    return a[i].cwiseProduct(x) + b[i] + c[i] * std::cos(d[i].dot(x)) * d[i];
  }
};

inline Vector random_vector(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(n);
  for (Eigen::Index j = 0; j < n; ++j) v[j] = normal(rng);
  return v;
}

inline RandomSum random_sum(std::size_t N, Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.1, 2.0), amp(-1.0, 1.0);
  RandomSum r;
  for (std::size_t i = 0; i < N; ++i) {
    Vector a(n);
    for (Eigen::Index j = 0; j < n; ++j) a[j] = pos(rng);
    r.a.push_back(a);
    r.b.push_back(random_vector(n, rng));
    r.d.push_back(random_vector(n, rng));
    r.c.push_back(amp(rng));
  }
  return r;
}

/// N=2 one-dimensional family f^(1)(x) = x^2, f^(2)(x) = 2 x^2.
inline std::shared_ptr<TermwiseObjective> quadratic_pair() {
  return std::make_shared<TermwiseObjective>(2, 1, [](std::size_t i, const Vector& x, Vector* g) {
    const double c = i == 0 ? 1.0 : 2.0;
    if (g) *g = 2.0 * c * x;
    return c * x.squaredNorm();
  });
}

/// Dense random dataset with labels in {-1, +1}.
inline std::shared_ptr<Dataset> random_dataset(std::size_t N, Eigen::Index n,
                                               std::mt19937_64& rng) {
  auto data = std::make_shared<Dataset>();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < n; ++j) idx[static_cast<std::size_t>(j)] = j;
  std::bernoulli_distribution coin(0.5);
  for (std::size_t i = 0; i < N; ++i) {
    const Vector z = random_vector(n, rng);
    std::vector<double> val(z.data(), z.data() + n);
    data->add_row(coin(rng) ? 1.0 : -1.0, idx, val);
  }
  data->map_labels(LabelMapping::kSigned);
  return data;
}

inline std::vector<std::size_t> iota_indices(std::size_t count) {
  std::vector<std::size_t> v(count);
  for (std::size_t i = 0; i < count; ++i) v[i] = i;
  return v;
}

/// Calls `visit` with every b-subset of {0, ..., N-1} in lexicographic order.
template <class Visit>
void for_each_subset(std::size_t N, std::size_t b, Visit visit) {
  std::vector<std::size_t> idx(b);
  for (std::size_t k = 0; k < b; ++k) idx[k] = k;
  while (true) {
    visit(idx);
    std::size_t k = b;
    while (k > 0 && idx[k - 1] == N - b + k - 1) --k;
    if (k == 0) return;
    ++idx[k - 1];
    for (std::size_t j = k; j < b; ++j) idx[j] = idx[j - 1] + 1;
  }
}

/// A random finite sum with a random chain of lower models below a top model
/// on a random subset. `models.back()` is the newest (lowest) one, and
/// `upper_grads[k]` is the gradient handed to make_lower_model for models[k+1].
struct RandomStack {
  std::shared_ptr<TermwiseObjective> objective;
  std::vector<LevelModel> models;
  std::vector<Vector> upper_grads;
  std::vector<double> weights;
};

inline RandomStack random_stack(std::mt19937_64& rng, int descents) {
  std::uniform_int_distribution<std::size_t> terms(4, 60);
  std::uniform_int_distribution<Eigen::Index> dim(1, 6);
  std::uniform_real_distribution<double> frac(0.05, 1.0), logw(-3.0, 2.0);
  const std::size_t N = terms(rng);
  const Eigen::Index n = dim(rng);
  RandomStack st;
  st.objective = random_sum(N, n, rng).objective();
  const std::size_t top_size = 1 + rng() % N;
  st.models.push_back(LevelModel::top(*st.objective,
                                      SampleSet(sample_without_replacement(N, top_size, rng),
                                                descents + 1),
                                      random_vector(n, rng), descents + 1));
  for (int d = 0; d < descents; ++d) {
    const LevelModel& parent = st.models.back();
    const Vector at = random_vector(n, rng, 0.5);
    const Vector g = parent.gradient(at);
    const SampleSet lower = draw_nested_subset(parent.samples(), frac(rng), rng);
    const double w = std::pow(10.0, logw(rng));
    st.upper_grads.push_back(g);
    st.weights.push_back(w);
    st.models.push_back(make_lower_model(parent, at, lower, g, w, parent.level() - 1));
  }
  return st;
}

}  // namespace mustreg::testing

#endif  // MUSTREG_TESTS_SUPPORT_HPP
