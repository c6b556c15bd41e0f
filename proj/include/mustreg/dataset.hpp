#ifndef MUSTREG_DATASET_HPP
#define MUSTREG_DATASET_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace mustreg {

/// How raw dataset labels become the labels used by the loss.
enum class LabelMapping {
  /// Two distinct raw values map order-preservingly onto {-1, +1}; a label set
  /// already inside {-1, +1} passes through.
  kSigned,
  /// Raw labels are used as they are.
  kPassthrough,
  /// Integer class labels: even -> +1, odd -> -1 (digit parity).
  kEvenOdd,
};

const char* to_string(LabelMapping m);
LabelMapping label_mapping_from_string(const std::string& s);

/// Row-sparse sample matrix with labels. Feature indices are zero-based.
class Dataset {
 public:
  struct Row {
    std::span<const Eigen::Index> indices;
    std::span<const double> values;

    double dot(const Eigen::VectorXd& x) const {
      double s = 0.0;
      for (std::size_t k = 0; k < indices.size(); ++k) s += values[k] * x[indices[k]];
      return s;
    }
  };

  Dataset() = default;

  std::size_t num_samples() const { return raw_labels_.size(); }
  Eigen::Index num_features() const { return num_features_; }
  std::size_t num_nonzeros() const { return values_.size(); }

  Row row(std::size_t i) const {
    const std::size_t b = row_ptr_[i], e = row_ptr_[i + 1];
    return {std::span<const Eigen::Index>(cols_.data() + b, e - b),
            std::span<const double>(values_.data() + b, e - b)};
  }

  double label(std::size_t i) const { return labels_[i]; }
  double raw_label(std::size_t i) const { return raw_labels_[i]; }
  const std::vector<double>& labels() const { return labels_; }
  const std::vector<double>& raw_labels() const { return raw_labels_; }
  LabelMapping label_mapping() const { return mapping_; }

  /// Appends a sample; `indices` must be strictly increasing.
  void add_row(double raw_label, std::span<const Eigen::Index> indices,
               std::span<const double> values);

  /// Recomputes mapped labels from raw labels. `reference` fixes the raw
  /// pair mapped to (-1, +1) so a test file can reuse its training mapping.
  void map_labels(LabelMapping mapping,
                  std::optional<std::pair<double, double>> reference = std::nullopt);

  /// The raw (negative, positive) label pair chosen by kSigned mapping.
  std::optional<std::pair<double, double>> signed_reference() const { return reference_; }

  void set_num_features(Eigen::Index n) { num_features_ = std::max(num_features_, n); }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<std::size_t> row_ptr_{0};
  std::vector<Eigen::Index> cols_;
  std::vector<double> values_;
  std::vector<double> raw_labels_;
  std::vector<double> labels_;
  Eigen::Index num_features_ = 0;
  LabelMapping mapping_ = LabelMapping::kSigned;
  std::optional<std::pair<double, double>> reference_;
};

struct ParseOptions {
  /// Lower bound on n; the result has max(declared, max index + 1) features.
  Eigen::Index declared_features = 0;
  LabelMapping mapping = LabelMapping::kSigned;
  std::optional<std::pair<double, double>> label_reference;
};

/// Parses LIBSVM text: "label idx:val idx:val ..." with strictly increasing
/// 1-based indices. Throws ParseError (with line number) or LabelError.
Dataset parse_libsvm(std::istream& in, const ParseOptions& options = {});

/// Reads a LIBSVM file; names ending in ".gz" are decompressed.
Dataset load_libsvm(const std::string& path, const ParseOptions& options = {});

/// Serializes with raw labels and shortest round-trip number formatting.
std::string to_libsvm(const Dataset& data);

/// The listed rows, in the given order.
Dataset select_rows(const Dataset& data, std::span<const std::size_t> rows);

/// Seeded shuffle, then the first `train_size` rows form the training set and
/// the next `test_size` rows the test set. Throws InvalidConfig when the sizes
/// exceed N or either is zero.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, std::size_t train_size,
                                             std::size_t test_size, std::uint64_t seed);

/// Same with the test size given as round(test_fraction * N).
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed);

/// Rescales every feature column to [0, 1] using the column range of `data`
/// (or of `reference` when given, so a test set can reuse training ranges).
Dataset min_max_scaled(const Dataset& data, const Dataset* reference = nullptr);

struct SyntheticSpec {
  std::size_t num_samples = 500;
  Eigen::Index num_features = 20;
  double margin = 1.0;
  /// Probability that a label is flipped; 0.5 leaves no signal in the labels.
  double noise = 0.0;
  std::uint64_t seed = 1;
};

/// Two Gaussian classes separated by `margin` along a random unit direction,
/// with each label flipped independently with probability `noise`. Dense rows.
Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace mustreg

#endif  // MUSTREG_DATASET_HPP
