#include "mustreg/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <zlib.h>

#include "mustreg/errors.hpp"
#include "mustreg/rng.hpp"

namespace mustreg {

const char* to_string(LabelMapping m) {
  switch (m) {
    case LabelMapping::kSigned:
      return "signed";
    case LabelMapping::kPassthrough:
      return "passthrough";
    case LabelMapping::kEvenOdd:
      return "even-odd";
  }
  return "?";
}

LabelMapping label_mapping_from_string(const std::string& s) {
  if (s == "signed") return LabelMapping::kSigned;
  if (s == "passthrough") return LabelMapping::kPassthrough;
  if (s == "even-odd") return LabelMapping::kEvenOdd;
  throw InvalidConfig("unknown label mapping '" + s + "'");
}

void Dataset::add_row(double raw_label, std::span<const Eigen::Index> indices,
                      std::span<const double> values) {
  if (indices.size() != values.size()) throw DimensionError("row index/value length mismatch");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 0 || (k > 0 && indices[k] <= indices[k - 1])) {
      throw ParseError("feature indices must be non-negative and strictly increasing", 0);
    }
  }
  cols_.insert(cols_.end(), indices.begin(), indices.end());
  values_.insert(values_.end(), values.begin(), values.end());
  row_ptr_.push_back(cols_.size());
  raw_labels_.push_back(raw_label);
  labels_.push_back(raw_label);
  if (!indices.empty()) num_features_ = std::max(num_features_, indices.back() + 1);
}

void Dataset::map_labels(LabelMapping mapping,
                         std::optional<std::pair<double, double>> reference) {
  mapping_ = mapping;
  reference_.reset();
  labels_.resize(raw_labels_.size());
  switch (mapping) {
    case LabelMapping::kPassthrough:
      labels_ = raw_labels_;
      return;
    case LabelMapping::kEvenOdd:
      for (std::size_t i = 0; i < raw_labels_.size(); ++i) {
        const double r = raw_labels_[i];
        if (r != std::floor(r)) throw LabelError("even-odd mapping needs integer labels");
        labels_[i] = (static_cast<long long>(r) % 2 == 0) ? 1.0 : -1.0;
      }
      return;
    case LabelMapping::kSigned:
      break;
  }
  std::pair<double, double> pair;
  if (reference) {
    pair = *reference;
  } else {
    std::set<double> distinct(raw_labels_.begin(), raw_labels_.end());
    if (distinct.size() > 2) {
      throw LabelError("found " + std::to_string(distinct.size()) +
                       " distinct labels, expected two classes");
    }
    const bool is_signed = std::all_of(distinct.begin(), distinct.end(),
                                       [](double v) { return v == -1.0 || v == 1.0; });
    if (is_signed) {
      pair = {-1.0, 1.0};
    } else if (distinct.size() == 2) {
      pair = {*distinct.begin(), *distinct.rbegin()};
    } else {
      throw LabelError("a single label outside {-1, +1} cannot be mapped to a class");
    }
  }
  for (std::size_t i = 0; i < raw_labels_.size(); ++i) {
    const double r = raw_labels_[i];
    if (r == pair.first) {
      labels_[i] = -1.0;
    } else if (r == pair.second) {
      labels_[i] = 1.0;
    } else {
      throw LabelError("label " + std::to_string(r) + " is not one of the two classes");
    }
  }
  reference_ = pair;
}

namespace {

double parse_number(std::string_view tok, std::size_t line, const char* what) {
  double v = 0.0;
  // from_chars rejects a leading '+', which LIBSVM files use for labels.
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw ParseError(std::string("malformed ") + what + " '" + std::string(tok) + "'", line);
  }
  return v;
}

}  // namespace

Dataset parse_libsvm(std::istream& in, const ParseOptions& options) {
  Dataset data;
  std::string text;
  std::size_t line_no = 0;
  std::vector<Eigen::Index> idx;
  std::vector<double> val;
  while (std::getline(in, text)) {
    ++line_no;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    std::string_view rest(text);
    auto next_token = [&rest]() -> std::string_view {
      const auto b = rest.find_first_not_of(" \t");
      if (b == std::string_view::npos) {
        rest = {};
        return {};
      }
      rest.remove_prefix(b);
      const auto e = rest.find_first_of(" \t");
      std::string_view tok = rest.substr(0, e);
      rest.remove_prefix(e == std::string_view::npos ? rest.size() : e);
      return tok;
    };
    std::string_view tok = next_token();
    if (tok.empty()) continue;
    const double label = parse_number(tok, line_no, "label");
    idx.clear();
    val.clear();
    while (!(tok = next_token()).empty()) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0 || colon + 1 == tok.size()) {
        throw ParseError("expected idx:val, got '" + std::string(tok) + "'", line_no);
      }
      long long index = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + colon, index);
      if (ec != std::errc() || ptr != tok.data() + colon || index < 1) {
        throw ParseError("malformed feature index '" + std::string(tok.substr(0, colon)) + "'",
                         line_no);
      }
      const Eigen::Index zero_based = static_cast<Eigen::Index>(index - 1);
      if (!idx.empty() && zero_based <= idx.back()) {
        throw ParseError("feature indices must be strictly increasing", line_no);
      }
      idx.push_back(zero_based);
      val.push_back(parse_number(tok.substr(colon + 1), line_no, "feature value"));
    }
    data.add_row(label, idx, val);
  }
  if (data.num_samples() == 0) throw ParseError("no samples found", 0);
  data.set_num_features(options.declared_features);
  data.map_labels(options.mapping, options.label_reference);
  return data;
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string read_gzip(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw ParseError("cannot open '" + path + "'", 0);
  std::string out;
  char buf[1 << 16];
  int got = 0;
  while ((got = gzread(f, buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(got));
  const bool failed = got < 0;
  gzclose(f);
  if (failed) throw ParseError("corrupt gzip stream in '" + path + "'", 0);
  return out;
}

}  // namespace

Dataset load_libsvm(const std::string& path, const ParseOptions& options) {
  if (ends_with(path, ".gz")) {
    std::istringstream in(read_gzip(path));
    return parse_libsvm(in, options);
  }
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0);
  return parse_libsvm(in, options);
}

namespace {

void append_number(std::string& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

std::string to_libsvm(const Dataset& data) {
  std::string out;
  for (std::size_t i = 0; i < data.num_samples(); ++i) {
    append_number(out, data.raw_label(i));
    const auto r = data.row(i);
    for (std::size_t k = 0; k < r.indices.size(); ++k) {
      out += ' ';
      out += std::to_string(r.indices[k] + 1);
      out += ':';
      append_number(out, r.values[k]);
    }
    out += '\n';
  }
  return out;
}

Dataset select_rows(const Dataset& data, std::span<const std::size_t> rows) {
  Dataset out;
  for (std::size_t i : rows) {
    if (i >= data.num_samples()) throw InvalidConfig("row index out of range");
    const auto r = data.row(i);
    out.add_row(data.raw_label(i), r.indices, r.values);
  }
  out.set_num_features(data.num_features());
  if (!rows.empty()) out.map_labels(data.label_mapping(), data.signed_reference());
  return out;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, std::size_t train_size,
                                             std::size_t test_size, std::uint64_t seed) {
  const std::size_t n = data.num_samples();
  if (train_size == 0 || test_size == 0) throw InvalidConfig("train and test sets must be non-empty");
  if (train_size > n || test_size > n - train_size) {
    throw InvalidConfig("split sizes " + std::to_string(train_size) + "+" +
                        std::to_string(test_size) + " exceed " + std::to_string(n) + " samples");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = RngKey(seed).child(RngPurpose::kSplit, 0, 0).engine();
  std::shuffle(order.begin(), order.end(), rng);
  std::span<const std::size_t> all(order);
  return {select_rows(data, all.subspan(0, train_size)),
          select_rows(data, all.subspan(train_size, test_size))};
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidConfig("test fraction must lie in (0, 1)");
  }
  const std::size_t n = data.num_samples();
  const auto test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (test == 0 || test >= n) throw InvalidConfig("test fraction leaves an empty set");
  return train_test_split(data, n - test, test, seed);
}

Dataset min_max_scaled(const Dataset& data, const Dataset* reference) {
  const Dataset& ref = reference ? *reference : data;
  const Eigen::Index n = std::max(data.num_features(), ref.num_features());
  // Implicit zeros take part in the column range.
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(n), hi = Eigen::VectorXd::Zero(n);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(n);
  for (std::size_t i = 0; i < ref.num_samples(); ++i) {
    const auto r = ref.row(i);
    for (std::size_t k = 0; k < r.indices.size(); ++k) {
      const Eigen::Index j = r.indices[k];
      lo[j] = std::min(lo[j], r.values[k]);
      hi[j] = std::max(hi[j], r.values[k]);
      ++count[j];
    }
  }
  auto scale = [&](Eigen::Index j, double v) {
    const double range = hi[j] - lo[j];
    return range > 0.0 ? (v - lo[j]) / range : 0.0;
  };
  Dataset out;
  std::vector<Eigen::Index> idx;
  std::vector<double> val;
  for (std::size_t i = 0; i < data.num_samples(); ++i) {
    const auto r = data.row(i);
    idx.clear();
    val.clear();
    std::size_t k = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      double v = 0.0;
      if (k < r.indices.size() && r.indices[k] == j) v = r.values[k++];
      const double s = scale(j, v);
      if (s != 0.0) {
        idx.push_back(j);
        val.push_back(s);
      }
    }
    out.add_row(data.raw_label(i), idx, val);
  }
  out.set_num_features(n);
  out.map_labels(data.label_mapping(), data.signed_reference());
  return out;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.num_samples < 2 || spec.num_features < 1) {
    throw InvalidConfig("synthetic problem needs N >= 2 and n >= 1");
  }
  if (!(spec.noise >= 0.0 && spec.noise <= 1.0) || !(spec.margin >= 0.0)) {
    throw InvalidConfig("synthetic noise must lie in [0, 1] and margin must be non-negative");
  }
  auto rng = RngKey(spec.seed).child(RngPurpose::kSynthetic, 0, 0).engine();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5), flip(spec.noise);
  const Eigen::Index n = spec.num_features;

  Eigen::VectorXd w(n);
  for (Eigen::Index j = 0; j < n; ++j) w[j] = normal(rng);
  w.normalize();

  Dataset out;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::vector<double> val(static_cast<std::size_t>(n));
  Eigen::VectorXd z(n);
  for (std::size_t i = 0; i < spec.num_samples; ++i) {
    const double y = coin(rng) ? 1.0 : -1.0;
    for (Eigen::Index j = 0; j < n; ++j) z[j] = normal(rng);
    // Replace the component along w so that y * w'z >= margin.
    const double along = spec.margin + std::abs(normal(rng));
    z += (y * along - w.dot(z)) * w;
    const double label = flip(rng) ? -y : y;
    for (Eigen::Index j = 0; j < n; ++j) val[static_cast<std::size_t>(j)] = z[j];
    out.add_row(label, idx, val);
  }
  out.map_labels(LabelMapping::kSigned, std::make_pair(-1.0, 1.0));
  return out;
}

}  // namespace mustreg
