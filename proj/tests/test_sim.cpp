#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "bipnet/sim.hpp"
#include "test_support.hpp"

using namespace bipnet;
using testing_support::error_kind;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_SUITE("sim") {
  TEST_CASE("binomial band") {
    const Interval b500 = binomial_band(500, 0.95);
    CHECK(b500.lo == doctest::Approx(0.9309).epsilon(5e-4));
    CHECK(b500.hi == doctest::Approx(0.9691).epsilon(5e-4));
    CHECK(0.95 - b500.lo == doctest::Approx(0.019101).epsilon(1e-4));
    const Interval b100 = binomial_band(100, 0.95);
    CHECK(b100.lo == doctest::Approx(0.9073).epsilon(1e-4));
    CHECK(b100.hi == doctest::Approx(0.9927).epsilon(1e-4));
    const Interval huge = binomial_band(1000000000000ULL, 0.95);
    CHECK(huge.hi - huge.lo < 1e-6);
  }

  TEST_CASE("cell sizes and seeds") {
    CHECK(split_size(1024, 0.125) == std::pair<std::size_t, std::size_t>{128, 896});
    CHECK(split_size(11, 0.5) == std::pair<std::size_t, std::size_t>{5, 6});
    CHECK(replicate_seed(1, 64, 0.5, 0, 3) == replicate_seed(1, 64, 0.5, 0, 3));
    CHECK(replicate_seed(1, 64, 0.5, 0, 3) != replicate_seed(1, 64, 0.5, 0, 4));
    CHECK(replicate_seed(1, 64, 0.5, 0, 3) != replicate_seed(1, 64, 0.125, 0, 3));
  }

  TEST_CASE("config parsing") {
    const auto c = config_from_json(nlohmann::json::parse(
        R"({"experiment":"coverage","model":{"type":"paper","which":"II"},"statistic":"d",
            "N_list":[64,128],"rho_list":[0.5],"epsilon_list":[1,3],"replicates":10,"seed":5,"alpha":0.9})"));
    CHECK(c.experiment == Experiment::coverage);
    CHECK(c.epsilon_list.size() == 2);
    CHECK(c.alpha == 0.9);
    CHECK(error_kind([] { config_from_json({{"experiment", "qq"}, {"replicates", 0}}); }) == ErrorKind::data);
    CHECK(error_kind([] { config_from_json({{"experiment", "qq"}, {"rho_list", {1.5}}}); }) == ErrorKind::data);
    CHECK(error_kind([] { config_from_json({{"experiment", "nope"}}); }) == ErrorKind::data);
    CHECK(error_kind([] { config_from_json({{"experiment", "qq"}, {"statistic", "zz"}}); }) == ErrorKind::data);
  }

  TEST_CASE("single replicate") {
    ExperimentConfig c;
    c.experiment = Experiment::qq;
    c.N_list = {40};
    c.replicates = 1;
    const auto r = run_qq(c);
    REQUIRE(r.qq.size() == 1);
    REQUIRE(r.qq[0].z.size() == 1);
    CHECK(std::isfinite(r.qq[0].z[0]));
  }

  TEST_CASE("outputs are byte-identical across runs") {
    ExperimentConfig c;
    c.experiment = Experiment::qq;
    c.statistic = "g2";
    c.N_list = {32, 48};
    c.rho_list = {0.5, 0.25};
    c.replicates = 20;
    c.output_dir = fresh_dir("bipnet_qq_a");
    run_experiment(c);
    const auto first = slurp(c.output_dir / "qq_N48_rho0.25.csv");
    const auto summary = slurp(c.output_dir / "summary.json");
    c.output_dir = fresh_dir("bipnet_qq_b");
    run_experiment(c);
    CHECK(slurp(c.output_dir / "qq_N48_rho0.25.csv") == first);
    CHECK(slurp(c.output_dir / "summary.json") == summary);

    std::istringstream lines(first);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "replicate,z,theoretical_q");
    double prev = -INFINITY;
    int rows = 0;
    while (std::getline(lines, line)) {
      const double z = std::stod(line.substr(line.find(',') + 1));
      CHECK(z >= prev);
      prev = z;
      ++rows;
    }
    CHECK(rows == 20);
  }

  TEST_CASE("degenerate replicates are kept as NaN rows") {
    // Bernoulli with probability one everywhere: every sample is the all-ones matrix.
    ExperimentConfig c;
    c.experiment = Experiment::qq;
    c.model = {{"type", "lbm"}, {"alpha", {1.0}}, {"beta", {1.0}}, {"pi", {{1.0}}}, {"emission", "bernoulli"}};
    c.statistic = "motif6";
    c.N_list = {12};
    c.replicates = 5;
    c.output_dir = fresh_dir("bipnet_qq_nan");
    const auto r = run_experiment(c);
    CHECK(r.qq[0].degenerate == 5);
    CHECK(r.summary["cells"][0]["degenerate"] == 5);
    const auto text = slurp(c.output_dir / "qq_N12_rho0.5.csv");
    CHECK(text.find("nan") != std::string::npos);

    c.experiment = Experiment::coverage;
    const auto cov = run_coverage(c);
    CHECK(cov.coverage[0].K == 5);
    CHECK(cov.coverage[0].covered_count == 0);
  }

  TEST_CASE("gaussian injection calibrates the coverage harness") {
    ExperimentConfig c;
    c.experiment = Experiment::coverage;
    c.statistic = "gaussian";
    c.N_list = {16, 64, 256};
    c.rho_list = {0.5, 0.125};
    c.replicates = 500;
    c.output_dir = fresh_dir("bipnet_cov_gauss");
    const auto r = run_experiment(c);
    REQUIRE(r.coverage.size() == 6);
    for (const auto& row : r.coverage) {
      CHECK(row.coverage >= row.band_lo);
      CHECK(row.coverage <= row.band_hi);
      CHECK(row.coverage == static_cast<double>(row.covered_count) / row.K);
    }
    const auto text = slurp(c.output_dir / "coverage.csv");
    CHECK(text.rfind("N,rho,param,covered_count,K,coverage,band_lo,band_hi", 0) == 0);
  }

  TEST_CASE("coverage needs a truth") {
    ExperimentConfig c;
    c.experiment = Experiment::coverage;
    c.model = {{"type", "bedd"},
               {"lambda", 1.0},
               {"f", {{"type", "power"}, {"alpha", 1.0}}},
               {"g", {{"type", "power"}, {"alpha", 1.0}}},
               {"emission", "poisson"}};
    c.statistic = "d";
    c.N_list = {20};
    c.replicates = 2;
    CHECK(run_coverage(c).coverage[0].truth == 0.0);
    c.model = {{"type", "lbm"}, {"alpha", {1.0}}, {"beta", {1.0}}, {"pi", {{0.0}}}, {"emission", "poisson"}};
    c.statistic = "f2";
    CHECK(error_kind([&] { run_coverage(c); }) == ErrorKind::data);
  }

  TEST_CASE("benchmark at N = 11") {
    ExperimentConfig c;
    c.experiment = Experiment::bench;
    c.N_list = {11, 32};
    c.replicates = 2;
    c.warmup = 1;
    c.output_dir = fresh_dir("bipnet_bench");
    const auto r = run_experiment(c);
    int a_rows = 0;
    for (const auto& row : r.bench) {
      CHECK(std::isfinite(row.mean_seconds));
      CHECK(std::isfinite(row.estimate_mean));
      if (row.algorithm == "A") {
        ++a_rows;
        CHECK(row.N == 11);
      }
    }
    CHECK(a_rows == 2);
    CHECK(r.summary["skipped"].size() == 2);
    for (const auto& b : r.bench) {
      if (b.algorithm != "B") continue;
      for (const auto& cc : r.bench) {
        if (cc.algorithm != "C" || cc.N != b.N || cc.kernel != b.kernel) continue;
        for (std::size_t k = 0; k < b.estimates.size(); ++k)
          CHECK(cc.estimates[k] == doctest::Approx(b.estimates[k]).epsilon(1e-10));
      }
    }
    const auto text = slurp(c.output_dir / "bench.csv");
    CHECK(text.rfind("N,algorithm,mean_seconds,sd_seconds,estimate_mean,estimate_sd", 0) == 0);
  }

  TEST_CASE("KS statistic") {
    CHECK(ks_statistic({0.0}) == doctest::Approx(0.5));
    std::mt19937_64 gen(7);
    std::normal_distribution<double> z;
    std::vector<double> s(2000);
    for (auto& x : s) x = z(gen);
    CHECK(ks_statistic(s) < 1.63 / std::sqrt(2000.0));
    for (auto& x : s) x += 0.5;
    CHECK(ks_statistic(s) > 1.63 / std::sqrt(2000.0));
  }
}
