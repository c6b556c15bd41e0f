#include "mustreg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "mustreg/accounting.hpp"
#include "mustreg/errors.hpp"
#include "mustreg/rng.hpp"

namespace mustreg {

const char* to_string(SolverKind s) {
  switch (s) {
    case SolverKind::kMu1:
      return "mu1";
    case SolverKind::kMu3:
      return "mu3";
    case SolverKind::kSvrg:
      return "svrg";
    case SolverKind::kAdagrad:
      return "adagrad";
  }
  return "?";
}

SolverKind solver_kind_from_string(const std::string& s) {
  if (s == "mu1") return SolverKind::kMu1;
  if (s == "mu3") return SolverKind::kMu3;
  if (s == "svrg") return SolverKind::kSvrg;
  if (s == "adagrad") return SolverKind::kAdagrad;
  throw InvalidConfig("unknown solver '" + s + "' (expected mu1, mu3, svrg or adagrad)");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* first = v.data();
  if (!v.empty() && v[0] == '+') ++first;
  auto res = std::from_chars(first, v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw InvalidConfig("'" + key + "' expects a number, got '" + v + "'");
  }
  return out;
}

long long parse_integer(const std::string& key, const std::string& v) {
  // Accept "1e4"-style values as long as they are integral.
  const double d = parse_double(key, v);
  if (d != std::floor(d) || std::fabs(d) > 9.0e15) {
    throw InvalidConfig("'" + key + "' expects an integer, got '" + v + "'");
  }
  return static_cast<long long>(d);
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  const long long i = parse_integer(key, v);
  if (i < 0) throw InvalidConfig("'" + key + "' must be non-negative");
  return static_cast<std::size_t>(i);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw InvalidConfig("'" + key + "' expects a boolean, got '" + v + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

nlohmann::json budget_json(double b) {
  return std::isfinite(b) ? nlohmann::json(b) : nlohmann::json(nullptr);
}

}  // namespace

SyntheticSpec parse_synthetic_spec(const std::string& text) {
  const std::vector<double> parts = parse_list("synthetic", text);
  if (parts.size() != 4) throw InvalidConfig("synthetic spec must be N,n,margin,noise");
  SyntheticSpec spec;
  if (parts[0] < 2 || parts[0] != std::floor(parts[0])) {
    throw InvalidConfig("synthetic N must be an integer >= 2");
  }
  if (parts[1] < 1 || parts[1] != std::floor(parts[1])) {
    throw InvalidConfig("synthetic n must be an integer >= 1");
  }
  if (!(parts[3] >= 0.0 && parts[3] <= 1.0)) throw InvalidConfig("synthetic noise must lie in [0, 1]");
  spec.num_samples = static_cast<std::size_t>(parts[0]);
  spec.num_features = static_cast<Eigen::Index>(parts[1]);
  spec.margin = parts[2];
  spec.noise = parts[3];
  return spec;
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  SolverConfig& sc = solver_config;
  if (key == "dataset") {
    dataset = v;
  } else if (key == "test_set") {
    test_set = v;
  } else if (key == "synthetic") {
    synthetic = v.empty() ? std::nullopt : std::optional<SyntheticSpec>(parse_synthetic_spec(v));
  } else if (key == "solver") {
    solver = solver_kind_from_string(v);
  } else if (key == "runs") {
    runs = static_cast<int>(parse_integer(key, v));
  } else if (key == "seed") {
    seed = parse_count(key, v);
  } else if (key == "eps") {
    eps = parse_double(key, v);
  } else if (key == "budget") {
    budget = parse_double(key, v);
  } else if (key == "out") {
    out = v;
  } else if (key == "label_mapping") {
    label_mapping = label_mapping_from_string(v);
  } else if (key == "features") {
    declared_features = static_cast<Eigen::Index>(parse_count(key, v));
  } else if (key == "loss_form") {
    loss_form = sigmoid_loss_form_from_string(v);
  } else if (key == "minmax") {
    minmax = parse_bool(key, v);
  } else if (key == "train_size") {
    train_size = parse_count(key, v);
  } else if (key == "test_size") {
    test_size = parse_count(key, v);
  } else if (key == "test_fraction") {
    test_fraction = parse_double(key, v);
  } else if (key == "split_seed") {
    split_seed = parse_count(key, v);
  } else if (key == "wall_time") {
    wall_time = parse_bool(key, v);
  } else if (key == "jobs") {
    jobs = static_cast<int>(parse_integer(key, v));
  } else if (key == "eta1") {
    sc.eta1 = parse_double(key, v);
  } else if (key == "eta2") {
    sc.eta2 = parse_double(key, v);
  } else if (key == "eta3") {
    sc.eta3 = parse_double(key, v);
  } else if (key == "gamma1") {
    sc.gamma1 = parse_double(key, v);
  } else if (key == "gamma2") {
    sc.gamma2 = parse_double(key, v);
  } else if (key == "gamma3") {
    sc.gamma3 = parse_double(key, v);
  } else if (key == "lambda_min") {
    sc.lambda_min = parse_double(key, v);
  } else if (key == "lambda0_single") {
    sc.lambda0_single = parse_double(key, v);
  } else if (key == "lambda0_multi") {
    sc.lambda0_multi = parse_double(key, v);
  } else if (key == "coarse_eps") {
    sc.coarse_eps = parse_double(key, v);
  } else if (key == "coarse_max_iterations") {
    sc.coarse_max_iterations = static_cast<int>(parse_integer(key, v));
  } else if (key == "max_fine_iterations") {
    sc.max_fine_iterations = parse_integer(key, v);
  } else if (key == "sample_fractions") {
    sc.sample_fractions = parse_list(key, v);
  } else if (key == "kappa_h") {
    sc.kappa_h = parse_double(key, v);
  } else if (key == "schedule") {
    sc.schedule.pattern = v;
  } else if (key == "coarse_return") {
    sc.coarse_return = coarse_return_from_string(v);
  } else if (key == "svrg_alpha") {
    svrg.alpha = parse_double(key, v);
  } else if (key == "svrg_batch") {
    svrg.batch = parse_count(key, v);
  } else if (key == "svrg_inner") {
    svrg.inner = parse_count(key, v);
  } else if (key == "svrg_max_iterations") {
    svrg.max_iterations = parse_integer(key, v);
  } else if (key == "adagrad_alpha") {
    adagrad.alpha = parse_double(key, v);
  } else if (key == "adagrad_batch") {
    adagrad.batch = parse_count(key, v);
  } else if (key == "adagrad_delta") {
    adagrad.delta = parse_double(key, v);
  } else if (key == "adagrad_budget") {
    adagrad.budget = parse_double(key, v);
  } else if (key == "adagrad_record_every") {
    adagrad.record_every = parse_count(key, v);
  } else {
    throw InvalidConfig("unknown configuration key '" + key + "'");
  }
}

void ExperimentConfig::apply_file(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", lineno);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("missing key", lineno);
    try {
      set(key, line.substr(eq + 1));
    } catch (const InvalidConfig& e) {
      throw ParseError(e.what(), lineno);
    }
  }
}

void ExperimentConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open config file '" + path + "'");
  apply_file(in);
}

void ExperimentConfig::validate() const {
  if (runs < 1) throw InvalidConfig("runs must be >= 1");
  if (!(budget > 0.0)) throw InvalidConfig("budget must be positive");
  if (!(eps > 0.0)) throw InvalidConfig("eps must be positive");
  if (jobs < 1) throw InvalidConfig("jobs must be >= 1");
  if (dataset.empty() && !synthetic) throw InvalidConfig("need a dataset or a synthetic spec");
  if (!dataset.empty() && synthetic) throw InvalidConfig("dataset and synthetic are exclusive");
  if (!test_set.empty() && dataset.empty()) throw InvalidConfig("a test set needs a dataset");
  if (test_set.empty() && train_size == 0 && test_size == 0 &&
      !(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InvalidConfig("test_fraction must lie in (0, 1)");
  }
  switch (solver) {
    case SolverKind::kMu1:
    case SolverKind::kMu3:
      effective_solver_config().validate();
      break;
    case SolverKind::kSvrg:
      if (effective_svrg_config().batch < 1) throw InvalidConfig("SVRG batch must be >= 1");
      break;
    case SolverKind::kAdagrad: {
      const AdagradConfig a = effective_adagrad_config();
      if (!std::isfinite(a.budget) || !(a.budget > 0.0)) {
        throw InvalidConfig("adagrad needs a finite budget");
      }
      break;
    }
  }
}

SolverConfig ExperimentConfig::effective_solver_config() const {
  SolverConfig c = solver_config;
  c.eps = eps;
  c.budget = budget;
  if (solver == SolverKind::kMu1) {
    c.levels = 1;
    c.sample_fractions.clear();
  } else if (solver == SolverKind::kMu3) {
    c.levels = 3;
  }
  return c;
}

SvrgConfig ExperimentConfig::effective_svrg_config() const {
  SvrgConfig c = svrg;
  c.eps = eps;
  c.budget = budget;
  return c;
}

AdagradConfig ExperimentConfig::effective_adagrad_config() const {
  AdagradConfig c = adagrad;
  if (std::isfinite(budget)) c.budget = budget;
  return c;
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["dataset"] = dataset;
  j["test_set"] = test_set;
  if (synthetic) {
    j["synthetic"] = {{"num_samples", synthetic->num_samples},
                      {"num_features", synthetic->num_features},
                      {"margin", synthetic->margin},
                      {"noise", synthetic->noise}};
  } else {
    j["synthetic"] = nullptr;
  }
  j["solver"] = to_string(solver);
  j["runs"] = runs;
  j["seed"] = seed;
  j["eps"] = eps;
  j["budget"] = budget_json(budget);
  j["label_mapping"] = to_string(label_mapping);
  j["features"] = declared_features;
  j["loss_form"] = to_string(loss_form);
  j["minmax"] = minmax;
  j["train_size"] = train_size;
  j["test_size"] = test_size;
  j["test_fraction"] = test_fraction;
  j["split_seed"] = split_seed;
  j["initial_point"] = "standard_normal";
  j["accuracy"] = "running max over scored rows";
  switch (solver) {
    case SolverKind::kMu1:
    case SolverKind::kMu3:
      j["solver_config"] = effective_solver_config().to_json();
      break;
    case SolverKind::kSvrg:
      j["solver_config"] = effective_svrg_config().to_json(0);
      break;
    case SolverKind::kAdagrad:
      j["solver_config"] = effective_adagrad_config().to_json();
      break;
  }
  return j;
}

PreparedData prepare_data(const ExperimentConfig& config) {
  PreparedData out;
  Dataset train, test;
  if (config.synthetic) {
    SyntheticSpec spec = *config.synthetic;
    spec.seed = config.seed;
    Dataset all = make_synthetic(spec);
    std::tie(train, test) = config.train_size + config.test_size > 0
                                ? train_test_split(all, config.train_size, config.test_size,
                                                   config.split_seed)
                                : train_test_split(all, config.test_fraction, config.split_seed);
    out.description["source"] = "synthetic";
  } else {
    ParseOptions opts;
    opts.declared_features = config.declared_features;
    opts.mapping = config.label_mapping;
    Dataset all = load_libsvm(config.dataset, opts);
    if (!config.test_set.empty()) {
      opts.label_reference = all.signed_reference();
      opts.declared_features = all.num_features();
      test = load_libsvm(config.test_set, opts);
      all.set_num_features(test.num_features());
      train = std::move(all);
      out.description["split"] = "files";
    } else {
      std::tie(train, test) = config.train_size + config.test_size > 0
                                  ? train_test_split(all, config.train_size, config.test_size,
                                                     config.split_seed)
                                  : train_test_split(all, config.test_fraction, config.split_seed);
      out.description["split"] = "seeded";
    }
    out.description["source"] = config.dataset;
  }
  if (config.minmax) {
    Dataset scaled_test = min_max_scaled(test, &train);
    train = min_max_scaled(train);
    test = std::move(scaled_test);
  }
  out.description["train_size"] = train.num_samples();
  out.description["test_size"] = test.num_samples();
  out.description["num_features"] = train.num_features();
  out.train = std::make_shared<const Dataset>(std::move(train));
  out.test = std::make_shared<const Dataset>(std::move(test));
  return out;
}

Summary summarize(const std::vector<RunTrace>& traces) {
  if (traces.empty()) throw InvalidConfig("cannot summarize zero runs");
  Summary s;
  s.runs = static_cast<int>(traces.size());
  for (const auto& t : traces) {
    s.ta.push_back(t.max_test_accuracy());
    s.wfg.push_back(t.final_wfg());
  }
  auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
    // Sum deviations from the first value so identical runs give exactly zero spread.
    CompensatedSum sum;
    for (double x : v) sum.add(x - v.front());
    mean = v.front() + sum.value() / static_cast<double>(v.size());
    CompensatedSum sq;
    for (double x : v) sq.add((x - mean) * (x - mean));
    sd = std::sqrt(sq.value() / static_cast<double>(v.size()));
    // Keep the mean inside the observed range despite rounding.
    mean = std::clamp(mean, *std::min_element(v.begin(), v.end()),
                      *std::max_element(v.begin(), v.end()));
  };
  stats(s.ta, s.mean_ta, s.std_ta);
  stats(s.wfg, s.mean_wfg, s.std_wfg);
  return s;
}

Vector initial_point(Eigen::Index n, std::uint64_t seed) {
  auto rng = RngKey(seed).child(RngPurpose::kInitialPoint, 0, 0).engine();
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x(n);
  for (Eigen::Index j = 0; j < n; ++j) x[j] = normal(rng);
  return x;
}

namespace {

std::string run_path(const std::string& dir, int run, const char* suffix) {
  return (std::filesystem::path(dir) / ("run_" + std::to_string(run) + suffix)).string();
}

RunOutcome execute_run(const ExperimentConfig& config, const PreparedData& data,
                       const SigmoidLeastSquares& objective, int run) {
  RunOutcome out;
  out.run = run;
  out.seed = config.seed + static_cast<std::uint64_t>(run);
  out.trace.header = config.to_json();
  out.trace.header["run"] = run;
  out.trace.header["run_seed"] = out.seed;
  out.trace.header["data"] = data.description;

  std::unique_ptr<CsvTraceWriter> writer;
  if (!config.out.empty()) {
    writer = std::make_unique<CsvTraceWriter>(run_path(config.out, run, ".csv"));
    out.trace.set_observer([&writer](const TraceRow& r) { writer->write(r); });
  }

  const Dataset& test = *data.test;
  auto monitor = [&test](const Vector& x) { return test_accuracy(x, test); };
  const std::size_t N = objective.num_terms();
  const auto n = static_cast<std::size_t>(objective.dimension());
  EvalAccountant accountant(n, N);
  const Vector x0 = initial_point(objective.dimension(), out.seed);

  switch (config.solver) {
    case SolverKind::kMu1:
    case SolverKind::kMu3: {
      MultilevelSolver solver(objective, config.effective_solver_config(), accountant, out.trace);
      solver.set_accuracy_monitor(monitor);
      solver.set_run_id(run);
      solver.set_record_wall_time(config.wall_time);
      out.result = solver.solve(x0, out.seed);
      break;
    }
    case SolverKind::kSvrg:
      out.trace.header["solver_config"] = config.effective_svrg_config().to_json(N);
      out.result = run_svrg(objective, config.effective_svrg_config(), accountant, out.trace, x0,
                            out.seed, {run, config.wall_time, monitor});
      break;
    case SolverKind::kAdagrad:
      out.result = run_adagrad(objective, config.effective_adagrad_config(), accountant,
                               out.trace, x0, out.seed, {run, config.wall_time, monitor});
      break;
  }
  out.trace.set_observer(nullptr);
  out.full_grad_norm = grad_subset(objective, SampleSet::full(N), out.result.x).norm();
  out.trace.header["status"] = to_string(out.result.status);

  if (writer) {
    writer->finish();
    write_file_atomically(run_path(config.out, run, ".ledger.csv"), ledger_csv(out.trace));
    write_file_atomically(run_path(config.out, run, ".json"), out.trace.header.dump(2) + "\n");
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  return run_experiment(config, prepare_data(config));
}

ExperimentResult run_experiment(const ExperimentConfig& config, const PreparedData& data) {
  config.validate();
  if (!config.out.empty()) std::filesystem::create_directories(config.out);
  const SigmoidLeastSquares objective(data.train, config.loss_form);

  ExperimentResult result;
  result.runs.resize(static_cast<std::size_t>(config.runs));
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int r = next++; r < config.runs; r = next++) {
      RunOutcome& slot = result.runs[static_cast<std::size_t>(r)];
      try {
        slot = execute_run(config, data, objective, r);
      } catch (const std::exception& e) {
        slot.run = r;
        slot.seed = config.seed + static_cast<std::uint64_t>(r);
        slot.error = e.what();
      }
    }
  };
  const int jobs = std::min(config.jobs, config.runs);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<RunTrace> traces;
  result.all_budget_exceeded = true;
  for (const auto& r : result.runs) {
    if (r.error.empty()) traces.push_back(r.trace);
    if (!r.error.empty() || r.result.status != RunStatus::kBudgetExceeded) {
      result.all_budget_exceeded = false;
    }
  }
  if (traces.empty()) throw Error("every run failed: " + result.runs.front().error);
  result.summary = summarize(traces);
  result.summary.solver = to_string(config.solver);
  result.summary.dataset = config.synthetic ? "synthetic" : config.dataset;

  nlohmann::json j;
  j["solver"] = result.summary.solver;
  j["dataset"] = result.summary.dataset;
  j["runs"] = result.summary.runs;
  j["mean_ta"] = result.summary.mean_ta;
  j["std_ta"] = result.summary.std_ta;
  j["mean_wfg"] = result.summary.mean_wfg;
  j["std_wfg"] = result.summary.std_wfg;
  j["per_run"] = nlohmann::json::array();
  for (const auto& r : result.runs) {
    nlohmann::json pr;
    pr["run"] = r.run;
    pr["seed"] = r.seed;
    if (r.error.empty()) {
      pr["status"] = to_string(r.result.status);
      pr["max_ta"] = r.trace.max_test_accuracy();
      pr["wfg"] = r.trace.final_wfg();
      pr["iterations"] = r.result.fine_iterations;
      pr["full_grad_norm"] = r.full_grad_norm;
    } else {
      pr["status"] = "error";
      pr["error"] = r.error;
    }
    j["per_run"].push_back(pr);
  }
  result.summary_json = j;
  if (!config.out.empty()) {
    write_file_atomically((std::filesystem::path(config.out) / "summary.json").string(),
                          j.dump(2) + "\n");
  }
  return result;
}

}  // namespace mustreg
