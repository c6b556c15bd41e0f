#include "mustreg/trace.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "mustreg/errors.hpp"

namespace mustreg {

const char* to_string(RowKind k) {
  switch (k) {
    case RowKind::kFine:
      return "fine";
    case RowKind::kCoarse:
      return "coarse";
    case RowKind::kStop:
      return "stop";
    case RowKind::kSvrgEpoch:
      return "svrg";
    case RowKind::kAdagrad:
      return "adagrad";
  }
  return "?";
}

const std::vector<std::string>& trace_csv_columns() {
  static const std::vector<std::string> cols = {
      "run",       "k",        "level",          "kind",     "sample_size",
      "lambda",    "grad_norm", "rho",           "accepted", "objective",
      "wfg_cumulative", "test_acc", "wall_ms"};
  return cols;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string trace_csv_header() {
  std::string out;
  for (const auto& c : trace_csv_columns()) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

std::string trace_csv_line(const TraceRow& r) {
  std::string out;
  out += std::to_string(r.run);
  out += ',' + std::to_string(r.k);
  out += ',' + std::to_string(r.level);
  out += ',';
  out += to_string(r.kind);
  out += ',' + std::to_string(r.sample_size);
  out += ',' + format_double(r.lambda);
  out += ',' + format_double(r.grad_norm);
  out += ',' + format_double(r.rho);
  out += r.accepted ? ",1" : ",0";
  out += ',' + format_double(r.objective);
  out += ',' + format_double(r.wfg_cumulative);
  out += ',' + format_double(r.test_acc);
  out += ',' + format_double(r.wall_ms);
  return out;
}

double RunTrace::max_test_accuracy() const {
  double best = kNotScored;
  for (const auto& r : rows) {
    if (std::isnan(r.test_acc)) continue;
    if (std::isnan(best) || r.test_acc > best) best = r.test_acc;
  }
  return best;
}

CsvTraceWriter::CsvTraceWriter(std::string path, std::size_t flush_every)
    : path_(std::move(path)), partial_(path_ + ".partial"), flush_every_(flush_every) {
  out_.open(partial_, std::ios::out | std::ios::trunc | std::ios::binary);
  if (!out_) throw InvalidConfig("cannot write '" + partial_ + "'");
  out_ << trace_csv_header() << '\n';
}

CsvTraceWriter::~CsvTraceWriter() {
  if (!finished_) {
    // Leave the partial file behind; it holds whatever was flushed so far.
    out_.flush();
  }
}

void CsvTraceWriter::write(const TraceRow& row) {
  out_ << trace_csv_line(row) << '\n';
  if (++pending_ >= flush_every_) {
    out_.flush();
    pending_ = 0;
  }
}

void CsvTraceWriter::finish() {
  if (finished_) return;
  out_.close();
  if (!out_) throw InvalidConfig("failed writing '" + partial_ + "'");
  std::filesystem::rename(partial_, path_);
  finished_ = true;
}

void write_file_atomically(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::out | std::ios::trunc | std::ios::binary);
    if (!out) throw InvalidConfig("cannot write '" + tmp + "'");
    out << contents;
    out.close();
    if (!out) throw InvalidConfig("failed writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

std::string ledger_csv(const RunTrace& trace) {
  const auto& ledger = trace.ledger;
  std::string out = "entry,row,kind,subset_size,weight\n";
  std::size_t row = 0;
  for (std::size_t k = 0; k < ledger.size(); ++k) {
    while (row < trace.rows.size() && trace.rows[row].ledger_mark <= k) ++row;
    out += std::to_string(k);
    out += ',' + std::to_string(row);
    out += ',';
    out += to_string(ledger[k].kind);
    out += ',' + std::to_string(ledger[k].subset_size);
    out += ',' + format_double(ledger[k].weight) + '\n';
  }
  return out;
}

}  // namespace mustreg
