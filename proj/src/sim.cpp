#include "bipnet/sim.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "bipnet/error.hpp"
#include "bipnet/normal.hpp"
#include "bipnet/parallel.hpp"
#include "bipnet/rng.hpp"
#include "bipnet/ustat.hpp"
#include "bipnet/varest.hpp"

namespace bipnet {

namespace {

constexpr const char* kVersion = "1.0.0";

Experiment experiment_from_string(const std::string& s) {
  if (s == "qq") return Experiment::qq;
  if (s == "coverage") return Experiment::coverage;
  if (s == "bench") return Experiment::bench;
  fail(ErrorKind::data, "unknown experiment '" + s + "' (expected qq, coverage or bench)");
}

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::qq: return "qq";
    case Experiment::coverage: return "coverage";
    case Experiment::bench: return "bench";
  }
  return "qq";
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string short_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

bool is_statistic(const std::string& s) {
  const auto& names = statistic_names();
  return std::find(names.begin(), names.end(), s) != names.end();
}

bool is_kernel(const std::string& s) {
  const auto& names = builtin_names();
  return std::find(names.begin(), names.end(), s) != names.end();
}

void validate(const ExperimentConfig& c) {
  if (c.replicates < 1) fail(ErrorKind::data, "replicates must be at least 1");
  if (c.N_list.empty()) fail(ErrorKind::data, "N_list must not be empty");
  if (c.rho_list.empty()) fail(ErrorKind::data, "rho_list must not be empty");
  for (const double rho : c.rho_list)
    if (!(rho > 0.0 && rho < 1.0)) fail(ErrorKind::data, "every rho must lie strictly between 0 and 1");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) fail(ErrorKind::data, "alpha (coverage level) must lie in (0, 1)");
  if (c.experiment != Experiment::bench && c.statistic != "gaussian" && !is_statistic(c.statistic) &&
      !is_kernel(c.statistic)) {
    fail(ErrorKind::data, "unknown statistic '" + c.statistic + "'");
  }
  for (const auto N : c.N_list)
    for (const double rho : c.rho_list) {
      const auto [m, n] = split_size(N, rho);
      if (m < 2 || n < 2) {
        fail(ErrorKind::data, "N = " + std::to_string(N) + " with rho = " + short_number(rho) +
                                  " leaves fewer than 2 rows or columns");
      }
    }
}

struct Cell {
  std::size_t N;
  double rho;
  double param;
  bool has_param;
  std::string name;
};

std::vector<Cell> cells(const ExperimentConfig& c) {
  std::vector<Cell> out;
  const bool has_param = !c.epsilon_list.empty();
  const std::vector<double> params = has_param ? c.epsilon_list : std::vector<double>{0.0};
  for (const double param : params)
    for (const double rho : c.rho_list)
      for (const auto N : c.N_list) {
        std::string name = "N" + std::to_string(N) + "_rho" + short_number(rho);
        if (has_param) name += "_eps" + short_number(param);
        out.push_back({N, rho, param, has_param, name});
      }
  return out;
}

ModelSpec cell_model(const ExperimentConfig& c, const Cell& cell) {
  nlohmann::json doc = c.model;
  if (cell.has_param) doc["epsilon"] = cell.param;
  return model_from_json(doc);
}

InferenceOptions cell_options(const ExperimentConfig& c, const Cell& cell) {
  InferenceOptions o;
  o.alpha = 1.0 - c.alpha;
  o.rho = c.fixed_rho ? RhoPolicy::fixed_at(cell.rho) : RhoPolicy::from_data();
  o.ustat.force = true;
  return o;
}

Truth cell_truth(const ExperimentConfig& c, const ModelSpec& model) {
  if (c.truth) return {*c.truth, 0.0, true};
  return statistic_truth(model, c.statistic, c.mc_budget, c.seed ^ 0x7472757468ULL);
}

struct Replicate {
  double estimate = std::numeric_limits<double>::quiet_NaN();
  double z = std::numeric_limits<double>::quiet_NaN();
  bool covered = false;
  bool degenerate = false;
};

std::vector<Replicate> run_cell(const ExperimentConfig& c, const Cell& cell, const ModelSpec& model,
                                double truth) {
  const auto [m, n] = split_size(cell.N, cell.rho);
  const InferenceOptions options = cell_options(c, cell);
  std::vector<Replicate> reps(c.replicates);
  parallel_for(c.replicates, [&](std::size_t k) {
    const std::uint64_t seed = replicate_seed(c.seed, cell.N, cell.rho, cell.param, k);
    Replicate& r = reps[k];
    try {
      const EstimateReport rep = simulate_replicate(model, c.statistic, m, n, seed, options);
      r.estimate = rep.estimate;
      r.degenerate = rep.degenerate;
      if (!rep.degenerate) {
        r.z = std::sqrt(static_cast<double>(rep.N) / rep.variance) * (rep.estimate - truth);
        r.covered = rep.ci.lo <= truth && truth <= rep.ci.hi;
      }
    } catch (const Error& e) {
      // An undefined statistic (e.g. an empty sample) counts as degenerate.
      if (e.kind() == ErrorKind::usage) throw;
      r.degenerate = true;
    }
  });
  return reps;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::data, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::data, "failed writing " + path.string());
}

nlohmann::json summary_base(const ExperimentConfig& c) {
  nlohmann::json config = to_json(c);
  config.erase("output_dir");
  return {{"experiment", to_string(c.experiment)}, {"version", kVersion}, {"config", config}};
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double s = 0.0;
  for (const double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  ExperimentConfig c;
  try {
    if (!doc.is_object()) fail(ErrorKind::data, "experiment config must be a JSON object");
    c.experiment = experiment_from_string(doc.at("experiment").get<std::string>());
    if (doc.contains("model")) c.model = doc.at("model");
    c.statistic = doc.value("statistic", c.statistic);
    c.N_list = doc.value("N_list", c.N_list);
    c.rho_list = doc.value("rho_list", c.rho_list);
    c.epsilon_list = doc.value("epsilon_list", c.epsilon_list);
    c.replicates = doc.value("replicates", c.replicates);
    c.seed = doc.value("seed", c.seed);
    c.alpha = doc.value("alpha", c.alpha);
    if (doc.contains("output_dir")) c.output_dir = doc.at("output_dir").get<std::string>();
    c.fixed_rho = doc.value("fixed_rho", c.fixed_rho);
    if (doc.contains("truth") && !doc.at("truth").is_null()) c.truth = doc.at("truth").get<double>();
    c.mc_budget = doc.value("mc_budget", c.mc_budget);
    c.algorithms = doc.value("algorithms", c.algorithms);
    c.kernels = doc.value("kernels", c.kernels);
    c.algorithm_A_max_N = doc.value("algorithm_A_max_N", c.algorithm_A_max_N);
    c.warmup = doc.value("warmup", c.warmup);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, std::string("invalid experiment config: ") + e.what());
  }
  model_from_json(c.model);  // validates early
  validate(c);
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j = {{"experiment", to_string(c.experiment)},
                      {"model", c.model},
                      {"statistic", c.statistic},
                      {"N_list", c.N_list},
                      {"rho_list", c.rho_list},
                      {"epsilon_list", c.epsilon_list},
                      {"replicates", c.replicates},
                      {"seed", c.seed},
                      {"alpha", c.alpha},
                      {"output_dir", c.output_dir.string()},
                      {"fixed_rho", c.fixed_rho},
                      {"mc_budget", c.mc_budget},
                      {"algorithms", c.algorithms},
                      {"kernels", c.kernels},
                      {"algorithm_A_max_N", c.algorithm_A_max_N},
                      {"warmup", c.warmup}};
  j["truth"] = c.truth ? nlohmann::json(*c.truth) : nlohmann::json(nullptr);
  return j;
}

std::pair<std::size_t, std::size_t> split_size(std::size_t N, double rho) {
  const auto m = static_cast<std::size_t>(std::floor(rho * static_cast<double>(N)));
  return {m, N - m};
}

Interval binomial_band(std::size_t K, double level) {
  if (K < 1) fail(ErrorKind::usage, "K must be at least 1");
  if (!(level > 0.0 && level < 1.0)) fail(ErrorKind::usage, "level must lie strictly between 0 and 1");
  const double half = normal_quantile(0.975) * std::sqrt(level * (1.0 - level) / static_cast<double>(K));
  return {level - half, level + half};
}

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t N, double rho, double param, std::size_t rep) {
  const std::uint64_t cell = substream_key(N, {std::bit_cast<std::uint64_t>(rho), std::bit_cast<std::uint64_t>(param)});
  return seed ^ substream_key(cell, {rep});
}

Truth statistic_truth(const ModelSpec& model, const std::string& statistic, std::size_t mc_budget,
                      std::uint64_t seed) {
  auto analytic = [&](const std::string& key) -> Truth {
    const auto v = model.truth(key);
    if (!v) fail(ErrorKind::data, "model '" + model.description + "' has no known value of " + key);
    return {*v, 0.0, true};
  };
  if (statistic == "gaussian") return {0.0, 0.0, true};
  if (statistic == "f2") return analytic("F2");
  if (statistic == "g2") return analytic("G2");
  if (statistic == "d") return analytic("d");
  std::string kernel = statistic;
  if (statistic == "motif6") kernel = "h6";
  if (statistic == "motif14") kernel = "h14";
  if (!is_kernel(kernel)) fail(ErrorKind::data, "no truth available for statistic '" + statistic + "'");
  const MonteCarloValue v = true_expectation(model, builtin(kernel), mc_budget, seed);
  return {v.value, v.std_error, v.analytic};
}

EstimateReport simulate_replicate(const ModelSpec& model, const std::string& statistic, std::size_t m,
                                  std::size_t n, std::uint64_t seed, const InferenceOptions& options) {
  if (statistic == "gaussian") {
    Substream rng(seed, {0x6761});
    EstimateReport r;
    r.statistic_id = statistic;
    r.N = m + n;
    r.variance = 1.0;
    r.estimate = rng.normal() / std::sqrt(static_cast<double>(r.N));
    r.alpha = options.alpha;
    r.ci = confidence_interval(r.estimate, r.variance, r.N, options.alpha);
    return r;
  }
  const BipartiteMatrix y = sample(model, m, n, seed).matrix;
  if (is_statistic(statistic)) return statistic_report(y, statistic, {}, options);
  const Kernel h = builtin(statistic);
  const VarianceEstimate v = variance_estimate(y, h, options.rho, VarianceMethod::direct, options.ustat);
  EstimateReport r;
  r.statistic_id = statistic;
  r.estimate = v.u;
  r.variance = v.V;
  r.N = m + n;
  r.degenerate = v.degenerate;
  r.alpha = options.alpha;
  r.ci = v.degenerate ? Interval{v.u, v.u} : confidence_interval(v.u, v.V, r.N, options.alpha);
  return r;
}

double ks_statistic(std::vector<double> sample) {
  std::erase_if(sample, [](double x) { return !std::isfinite(x); });
  if (sample.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = normal_cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

SimulationResult run_qq(const ExperimentConfig& c) {
  validate(c);
  SimulationResult res;
  res.summary = summary_base(c);
  nlohmann::json cell_docs = nlohmann::json::array();
  for (const Cell& cell : cells(c)) {
    const ModelSpec model = cell_model(c, cell);
    const Truth truth = cell_truth(c, model);
    const auto reps = run_cell(c, cell, model, truth.value);
    QQCell q{cell.name, cell.N, cell.rho, cell.param, {}, 0, 0.0};
    for (const auto& r : reps) {
      q.z.push_back(r.z);
      q.degenerate += static_cast<std::size_t>(r.degenerate);
    }
    q.ks = ks_statistic(q.z);
    cell_docs.push_back({{"cell", cell.name},
                         {"N", cell.N},
                         {"rho", cell.rho},
                         {"param", cell.param},
                         {"degenerate", q.degenerate},
                         {"truth", truth.value},
                         {"truth_se", truth.std_error},
                         {"ks", q.ks}});
    res.qq.push_back(std::move(q));
  }
  res.summary["cells"] = cell_docs;
  return res;
}

SimulationResult run_coverage(const ExperimentConfig& c) {
  validate(c);
  SimulationResult res;
  res.summary = summary_base(c);
  nlohmann::json cell_docs = nlohmann::json::array();
  for (const Cell& cell : cells(c)) {
    const ModelSpec model = cell_model(c, cell);
    const Truth truth = cell_truth(c, model);
    const auto reps = run_cell(c, cell, model, truth.value);
    CoverageRow row;
    row.N = cell.N;
    row.rho = cell.rho;
    row.param = cell.param;
    row.K = c.replicates;
    std::vector<double> estimates;
    for (const auto& r : reps) {
      row.covered_count += static_cast<std::size_t>(r.covered);
      row.degenerate += static_cast<std::size_t>(r.degenerate);
      if (std::isfinite(r.estimate)) estimates.push_back(r.estimate);
    }
    row.coverage = static_cast<double>(row.covered_count) / static_cast<double>(row.K);
    const Interval band = binomial_band(row.K, c.alpha);
    row.band_lo = band.lo;
    row.band_hi = band.hi;
    row.truth = truth.value;
    row.truth_se = truth.std_error;
    row.estimate_mean = mean_of(estimates);
    cell_docs.push_back({{"cell", cell.name}, {"degenerate", row.degenerate}, {"truth_analytic", truth.analytic}});
    res.coverage.push_back(row);
  }
  res.summary["cells"] = cell_docs;
  return res;
}

SimulationResult run_bench(const ExperimentConfig& c) {
  validate(c);
  for (const auto& a : c.algorithms)
    if (a != "A" && a != "B" && a != "C") fail(ErrorKind::data, "unknown algorithm '" + a + "' (expected A, B or C)");
  SimulationResult res;
  res.summary = summary_base(c);
  nlohmann::json skipped = nlohmann::json::array();
  const std::size_t saved_threads = thread_count();
  set_thread_count(1);
  const ModelSpec model = model_from_json(c.model);
  const double rho = c.rho_list.front();
  try {
    for (const auto N : c.N_list) {
      const auto [m, n] = split_size(N, rho);
      for (const auto& kid : c.kernels) {
        const Kernel h = builtin(kid);
        for (const auto& alg : c.algorithms) {
          if (alg == "A" && N > c.algorithm_A_max_N) {
            skipped.push_back({{"N", N}, {"kernel", kid}, {"algorithm", alg},
                               {"reason", "N above algorithm_A_max_N = " + std::to_string(c.algorithm_A_max_N)}});
            continue;
          }
          if (alg == "C" && !has_fast_path(h)) {
            skipped.push_back({{"N", N}, {"kernel", kid}, {"algorithm", alg}, {"reason", "no matrix-operation path"}});
            continue;
          }
          auto run = [&](const BipartiteMatrix& y) {
            const RhoPolicy policy = c.fixed_rho ? RhoPolicy::fixed_at(rho) : RhoPolicy::from_data();
            if (alg == "A") return algorithm_A_variance(y, h, policy).V;
            if (alg == "B") return algorithm_B_variance(y, h, policy).V;
            return algorithm_C_variance(y, kid, policy).V;
          };
          BenchRow row{N, kid, alg, 0.0, 0.0, 0.0, 0.0, 0, {}};
          std::vector<double> seconds;
          for (std::size_t k = 0; k < c.replicates; ++k) {
            const auto y = sample(model, m, n, replicate_seed(c.seed, N, rho, 0.0, k)).matrix;
            if (k == 0)
              for (std::size_t w = 0; w < c.warmup; ++w) run(y);
            const auto t0 = std::chrono::steady_clock::now();
            const double v = run(y);
            const auto t1 = std::chrono::steady_clock::now();
            seconds.push_back(std::chrono::duration<double>(t1 - t0).count());
            row.estimates.push_back(v);
          }
          row.runs = seconds.size();
          row.mean_seconds = mean_of(seconds);
          row.sd_seconds = sd_of(seconds);
          row.estimate_mean = mean_of(row.estimates);
          row.estimate_sd = sd_of(row.estimates);
          res.bench.push_back(std::move(row));
        }
      }
    }
  } catch (...) {
    set_thread_count(saved_threads);
    throw;
  }
  set_thread_count(saved_threads);
  res.summary["skipped"] = skipped;
  res.summary["timing"] = "variance-estimation call only, single thread, " + std::to_string(c.warmup) +
                          " warm-up runs discarded";
  return res;
}

SimulationResult run_experiment(const ExperimentConfig& c) {
  SimulationResult res;
  switch (c.experiment) {
    case Experiment::qq: res = run_qq(c); break;
    case Experiment::coverage: res = run_coverage(c); break;
    case Experiment::bench: res = run_bench(c); break;
  }
  if (c.output_dir.empty()) return res;
  std::error_code ec;
  std::filesystem::create_directories(c.output_dir, ec);
  if (ec) fail(ErrorKind::data, "cannot create " + c.output_dir.string() + ": " + ec.message());
  for (const QQCell& q : res.qq) {
    std::vector<std::size_t> order(q.z.size());
    std::iota(order.begin(), order.end(), 0);
    // Finite values ascending, degenerate (NaN) rows last.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const bool fa = std::isfinite(q.z[a]), fb = std::isfinite(q.z[b]);
      if (fa != fb) return fa;
      return fa && q.z[a] < q.z[b];
    });
    const std::size_t finite = q.z.size() - q.degenerate;
    std::string text = "replicate,z,theoretical_q\n";
    for (std::size_t k = 0; k < order.size(); ++k) {
      const double z = q.z[order[k]];
      const double tq = std::isfinite(z)
                            ? normal_quantile((static_cast<double>(k) + 0.5) / static_cast<double>(finite))
                            : std::numeric_limits<double>::quiet_NaN();
      text += std::to_string(order[k]) + "," + fmt(z) + "," + fmt(tq) + "\n";
    }
    write_text(c.output_dir / ("qq_" + q.name + ".csv"), text);
  }
  if (c.experiment == Experiment::coverage) {
    std::string text = "N,rho,param,covered_count,K,coverage,band_lo,band_hi,truth,truth_se,degenerate,estimate_mean\n";
    for (const auto& r : res.coverage) {
      text += std::to_string(r.N) + "," + fmt(r.rho) + "," + fmt(r.param) + "," + std::to_string(r.covered_count) +
              "," + std::to_string(r.K) + "," + fmt(r.coverage) + "," + fmt(r.band_lo) + "," + fmt(r.band_hi) + "," +
              fmt(r.truth) + "," + fmt(r.truth_se) + "," + std::to_string(r.degenerate) + "," + fmt(r.estimate_mean) +
              "\n";
    }
    write_text(c.output_dir / "coverage.csv", text);
  }
  if (c.experiment == Experiment::bench) {
    std::string text = "N,algorithm,mean_seconds,sd_seconds,estimate_mean,estimate_sd,kernel,runs\n";
    for (const auto& r : res.bench) {
      text += std::to_string(r.N) + "," + r.algorithm + "," + fmt(r.mean_seconds) + "," + fmt(r.sd_seconds) + "," +
              fmt(r.estimate_mean) + "," + fmt(r.estimate_sd) + "," + r.kernel + "," + std::to_string(r.runs) + "\n";
    }
    write_text(c.output_dir / "bench.csv", text);
  }
  write_text(c.output_dir / "summary.json", res.summary.dump(2) + "\n");
  return res;
}

}  // namespace bipnet
