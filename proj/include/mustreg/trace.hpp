#ifndef MUSTREG_TRACE_HPP
#define MUSTREG_TRACE_HPP

#include <cstddef>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "mustreg/accounting.hpp"

namespace mustreg {

enum class RowKind { kFine, kCoarse, kStop, kSvrgEpoch, kAdagrad };

const char* to_string(RowKind k);

inline constexpr double kNotScored = std::numeric_limits<double>::quiet_NaN();

/// One record per iteration attempt, in execution order. The first block
/// maps one-to-one onto the CSV columns; the rest is kept in memory only.
struct TraceRow {
  int run = 0;
  long long k = 0;
  int level = 0;
  RowKind kind = RowKind::kFine;
  std::size_t sample_size = 0;
  double lambda = 0.0;
  double grad_norm = 0.0;
  double rho = kNotScored;
  bool accepted = false;
  double objective = 0.0;
  double wfg_cumulative = 0.0;
  double test_acc = kNotScored;
  double wall_ms = 0.0;

  double step_norm = 0.0;            // norm of the trial step (0 if none)
  double predicted_decrease = kNotScored;
  double applied_step_norm = 0.0;    // norm of (new iterate - old iterate)
  std::size_t ledger_mark = 0;       // ledger entries charged up to this row
  long long call_id = 0;             // recursion call that produced the row
};

/// Column order of the CSV trace files.
const std::vector<std::string>& trace_csv_columns();

/// Formats a double with the shortest representation that round-trips.
std::string format_double(double v);

std::string trace_csv_header();
std::string trace_csv_line(const TraceRow& row);

/// Rows and ledger of one run plus a JSON header with the full configuration.
class RunTrace {
 public:
  using Observer = std::function<void(const TraceRow&)>;

  nlohmann::json header = nlohmann::json::object();
  std::vector<TraceRow> rows;
  std::vector<Charge> ledger;

  void set_observer(Observer obs) { observer_ = std::move(obs); }

  void append(TraceRow row) {
    rows.push_back(std::move(row));
    if (observer_) observer_(rows.back());
  }

  /// Largest test accuracy over scored rows (NaN when none was scored).
  double max_test_accuracy() const;
  double final_wfg() const { return rows.empty() ? 0.0 : rows.back().wfg_cumulative; }

 private:
  Observer observer_;
};

/// Streams rows to `<path>.partial`, flushing every `flush_every` rows, and
/// renames to `path` on finish().
class CsvTraceWriter {
 public:
  explicit CsvTraceWriter(std::string path, std::size_t flush_every = 100);
  CsvTraceWriter(const CsvTraceWriter&) = delete;
  CsvTraceWriter& operator=(const CsvTraceWriter&) = delete;
  ~CsvTraceWriter();

  void write(const TraceRow& row);
  void finish();

 private:
  std::string path_;
  std::string partial_;
  std::ofstream out_;
  std::size_t flush_every_;
  std::size_t pending_ = 0;
  bool finished_ = false;
};

/// Writes `contents` to a temporary sibling file and renames it over `path`.
void write_file_atomically(const std::string& path, const std::string& contents);

/// CSV with columns entry,row,kind,subset_size,weight; one line per charge,
/// `row` being the index of the trace row the charge was booked under.
std::string ledger_csv(const RunTrace& trace);

}  // namespace mustreg

#endif  // MUSTREG_TRACE_HPP
