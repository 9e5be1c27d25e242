#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bipnet/inference.hpp"
#include "bipnet/models.hpp"

namespace bipnet {

enum class Experiment { qq, coverage, bench };

/// Simulation study description, read from JSON. `alpha` is the coverage
/// level of the intervals (0.95 means 95% intervals).
struct ExperimentConfig {
  Experiment experiment = Experiment::qq;
  nlohmann::json model = {{"type", "paper"}, {"which", "III"}};
  std::string statistic = "f2";
  std::vector<std::size_t> N_list = {128};
  std::vector<double> rho_list = {0.5};
  std::vector<double> epsilon_list;  ///< substituted into model.epsilon, one cell per value
  std::size_t replicates = 200;
  std::uint64_t seed = 20240101;
  double alpha = 0.95;
  std::filesystem::path output_dir;  ///< empty: nothing is written
  bool fixed_rho = false;            ///< weight variances by the cell rho instead of m/(m+n)
  std::optional<double> truth;       ///< overrides the model truth
  std::size_t mc_budget = 1000000;
  // bench only
  std::vector<std::string> algorithms = {"A", "B", "C"};
  std::vector<std::string> kernels = {"h1", "h2"};
  std::size_t algorithm_A_max_N = 24;
  std::size_t warmup = 3;
};

ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ExperimentConfig& config);

/// m = floor(rho N), n = N - m.
std::pair<std::size_t, std::size_t> split_size(std::size_t N, double rho);

/// level -/+ z_{0.975} sqrt(level (1 - level) / K).
Interval binomial_band(std::size_t K, double level);

/// Seed of replicate `rep` in the cell identified by (N, rho, param).
std::uint64_t replicate_seed(std::uint64_t seed, std::size_t N, double rho, double param, std::size_t rep);

/// Statistic names accepted by the simulator: the inference statistics,
/// any builtin kernel name (plain U-statistic), and "gaussian" (exactly
/// normal synthetic estimates, for calibrating the harness).
struct Truth {
  double value = 0.0;
  double std_error = 0.0;
  bool analytic = true;
};
Truth statistic_truth(const ModelSpec& model, const std::string& statistic, std::size_t mc_budget,
                      std::uint64_t seed);

/// One replicate's report for the statistic on a fresh sample.
EstimateReport simulate_replicate(const ModelSpec& model, const std::string& statistic, std::size_t m,
                                  std::size_t n, std::uint64_t seed, const InferenceOptions& options);

struct QQCell {
  std::string name;
  std::size_t N = 0;
  double rho = 0.5;
  double param = 0.0;
  std::vector<double> z;  ///< by replicate; NaN for degenerate replicates
  std::size_t degenerate = 0;
  double ks = 0.0;  ///< Kolmogorov-Smirnov distance of the finite z to N(0, 1)
};

struct CoverageRow {
  std::size_t N = 0;
  double rho = 0.5;
  double param = 0.0;
  std::size_t covered_count = 0;
  std::size_t K = 0;
  double coverage = 0.0;
  double band_lo = 0.0;
  double band_hi = 0.0;
  double truth = 0.0;
  double truth_se = 0.0;
  std::size_t degenerate = 0;
  double estimate_mean = 0.0;
};

struct BenchRow {
  std::size_t N = 0;
  std::string kernel;
  std::string algorithm;
  double mean_seconds = 0.0;
  double sd_seconds = 0.0;
  double estimate_mean = 0.0;
  double estimate_sd = 0.0;
  std::size_t runs = 0;
  std::vector<double> estimates;
};

struct SimulationResult {
  std::vector<QQCell> qq;
  std::vector<CoverageRow> coverage;
  std::vector<BenchRow> bench;
  nlohmann::json summary;
};

double ks_statistic(std::vector<double> sample);

SimulationResult run_qq(const ExperimentConfig& config);
SimulationResult run_coverage(const ExperimentConfig& config);
SimulationResult run_bench(const ExperimentConfig& config);
/// Dispatches on config.experiment and writes the outputs when output_dir is set.
SimulationResult run_experiment(const ExperimentConfig& config);

}  // namespace bipnet
