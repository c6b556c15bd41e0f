#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mustreg/accounting.hpp"
#include "mustreg/errors.hpp"
#include "mustreg/trace.hpp"
#include "support.hpp"

using namespace mustreg;
using namespace mustreg::testing;

namespace {

Dataset toy_test_set() {
  Dataset d;
  const std::vector<Eigen::Index> idx{0, 1};
  d.add_row(1.0, idx, std::vector<double>{1.0, 0.5});
  d.add_row(1.0, idx, std::vector<double>{2.0, -1.0});
  d.add_row(-1.0, idx, std::vector<double>{-1.0, 0.2});
  d.add_row(1.0, idx, std::vector<double>{0.5, 3.0});
  d.map_labels(LabelMapping::kSigned);
  return d;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("charge weights") {
  EvalAccountant acc(112, 6500);
  CHECK(acc.charge(ChargeKind::kGradient, 6500) == 1.0);
  CHECK(acc.charge(ChargeKind::kGradient, 65) == doctest::Approx(1.01).epsilon(1e-15));
  const double before = acc.total();
  CHECK(acc.charge(ChargeKind::kFunction, 6500) - before == doctest::Approx(1.0 / 112));
  CHECK(acc.ledger().size() == 3);
  CHECK(acc.ledger()[1].subset_size == 65);
  CHECK(charge_weight(ChargeKind::kFunction, 10, 100, 4) == doctest::Approx(0.025));
  CHECK_THROWS_AS(acc.charge(ChargeKind::kGradient, 0), InvalidCharge);
  CHECK_THROWS_AS(acc.charge(ChargeKind::kGradient, 6501), InvalidCharge);
}

TEST_CASE("ledger replay reproduces the running total") {
  std::mt19937_64 rng(1);
  EvalAccountant acc(7, 1234);
  std::vector<double> totals;
  for (int i = 0; i < 5000; ++i) {
    const auto kind = rng() % 2 ? ChargeKind::kGradient : ChargeKind::kFunction;
    totals.push_back(acc.charge(kind, 1 + rng() % 1234));
  }
  for (std::size_t k = 0; k < totals.size(); k += 97) {
    CHECK(replay_ledger(acc.ledger(), k + 1, 1234, 7) == totals[k]);
  }
  CHECK(replay_ledger(acc.ledger(), 0, 1234, 7) == 0.0);
}

TEST_CASE("metered objective charges each call") {
  auto obj = quadratic_pair();
  EvalAccountant acc(1, 2);
  const MeteredObjective m(*obj, acc);
  const Vector x = Vector::Ones(1);
  CHECK(m.value(SampleSet({0, 1}), x) == 1.5);
  CHECK(acc.total() == 1.0);   // n = 1
  m.gradient(SampleSet({1}), x);
  CHECK(acc.total() == 1.5);
  m.value_and_gradient(SampleSet({1}), x);
  CHECK(acc.total() == 2.5);
  CHECK(acc.ledger().size() == 4);
}

TEST_CASE("test accuracy") {
  const Dataset d = toy_test_set();
  CHECK(test_accuracy(Vector::Zero(2), d) == 75.0);   // ties go to the positive class
  const Vector sep = (Vector(2) << 1.0, 0.0).finished();
  CHECK(test_accuracy(sep, d) == 100.0);
  CHECK(test_accuracy(-sep, d) == 0.0);
  const Vector w = (Vector(2) << 0.3, -1.0).finished();
  CHECK(test_accuracy(w, d) == test_accuracy(2.0 * w, d));
  CHECK_THROWS_AS(test_accuracy(Vector::Zero(1), d), DimensionError);
  CHECK_THROWS_AS(test_accuracy(Vector::Zero(2), Dataset{}), InvalidConfig);
}

TEST_CASE("trace csv layout") {
  CHECK(trace_csv_header() ==
        "run,k,level,kind,sample_size,lambda,grad_norm,rho,accepted,objective,wfg_cumulative,"
        "test_acc,wall_ms");
  TraceRow r;
  r.run = 2;
  r.k = 7;
  r.level = 3;
  r.kind = RowKind::kCoarse;
  r.sample_size = 114;
  r.lambda = 0.1;
  r.grad_norm = 0.25;
  r.rho = 0.9;
  r.accepted = true;
  r.objective = 1.0 / 3.0;
  r.wfg_cumulative = 12.5;
  const std::string line = trace_csv_line(r);
  CHECK(line.rfind("2,7,3,coarse,114,0.1,0.25,0.9,1,", 0) == 0);
  // Shortest round-trip formatting.
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(format_double(0.1) == "0.1");
  std::size_t commas = 0;
  for (char c : line) commas += c == ',';
  CHECK(commas == trace_csv_columns().size() - 1);
}

TEST_CASE("csv writer renames the partial file on finish") {
  const auto dir = std::filesystem::temp_directory_path() / "mustreg_trace_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "run.csv").string();
  {
    CsvTraceWriter w(path, 2);
    TraceRow r;
    for (int k = 0; k < 5; ++k) {
      r.k = k;
      w.write(r);
    }
    CHECK(std::filesystem::exists(path + ".partial"));
    CHECK_FALSE(std::filesystem::exists(path));
    w.finish();
  }
  CHECK(std::filesystem::exists(path));
  CHECK_FALSE(std::filesystem::exists(path + ".partial"));
  const std::string text = slurp(path);
  CHECK(std::count(text.begin(), text.end(), '\n') == 6);

  write_file_atomically((dir / "x.json").string(), "{}\n");
  CHECK(slurp((dir / "x.json").string()) == "{}\n");
  std::filesystem::remove_all(dir);
}

TEST_CASE("ledger csv attributes charges to rows") {
  RunTrace t;
  EvalAccountant acc(2, 10);
  acc.charge(ChargeKind::kGradient, 10);
  TraceRow a;
  a.ledger_mark = acc.ledger().size();
  t.append(a);
  acc.charge(ChargeKind::kFunction, 5);
  acc.charge(ChargeKind::kGradient, 5);
  TraceRow b;
  b.ledger_mark = acc.ledger().size();
  t.append(b);
  t.ledger = acc.ledger();
  CHECK(ledger_csv(t) ==
        "entry,row,kind,subset_size,weight\n"
        "0,0,grad,10,1\n"
        "1,1,func,5,0.25\n"
        "2,1,grad,5,0.5\n");
}

TEST_CASE("max test accuracy ignores unscored rows") {
  RunTrace t;
  CHECK(std::isnan(t.max_test_accuracy()));
  TraceRow r;
  t.append(r);
  r.test_acc = 80.0;
  t.append(r);
  r.test_acc = 70.0;
  r.wfg_cumulative = 3.0;
  t.append(r);
  CHECK(t.max_test_accuracy() == 80.0);
  CHECK(t.final_wfg() == 3.0);
}
