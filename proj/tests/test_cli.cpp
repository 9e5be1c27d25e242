#include <filesystem>
#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "bipnet/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "bipnet");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = bipnet::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string data(const char* name) { return (fs::path(BIPNET_TEST_DATA) / name).string(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::set<std::string> keys(const nlohmann::json& j) {
  std::set<std::string> k;
  for (auto it = j.begin(); it != j.end(); ++it) k.insert(it.key());
  return k;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("ustat on the ones matrix") {
    const auto r = cli({"ustat", "--matrix", data("ones2x2.csv"), "--kernel", "hD"});
    CHECK(r.code == 0);
    CHECK(r.out == "1\n");
    CHECK(r.err.empty());
  }

  TEST_CASE("exit codes") {
    CHECK(cli({}).code == 1);
    CHECK(cli({"frobnicate"}).code == 1);
    CHECK(cli({"ustat", "--matrix", data("ones2x2.csv")}).code == 1);
    CHECK(cli({"ustat", "--matrix", data("ones2x2.csv"), "--kernel", "hZ"}).code == 1);
    CHECK(cli({"ustat", "--matrix", "/no/such/file.csv", "--kernel", "hD"}).code == 2);
    const auto motif = cli({"estimate", "--matrix", data("counts4x4.csv"), "--stat", "motif6"});
    CHECK(motif.code == 2);
    CHECK(motif.err.find("binary") != std::string::npos);
    CHECK(motif.out.empty());
    const auto degenerate = cli({"estimate", "--matrix", data("ones3x3.csv"), "--stat", "f2", "--null", "1"});
    CHECK(degenerate.code == 3);
    CHECK(degenerate.err.find("degenerate") != std::string::npos);
    CHECK(cli({"--help"}).code == 0);
  }

  TEST_CASE("help mentions every flag and the thread variable") {
    const auto top = cli({"--help"});
    for (const char* flag : {"--json", "--seed", "--threads", "BIPNET_THREADS", "sample", "simulate"})
      CHECK(top.out.find(flag) != std::string::npos);
    const auto est = cli({"estimate", "--help"});
    for (const char* flag : {"--matrix", "--stat", "--null", "--alpha", "--tail", "--rho"})
      CHECK(est.out.find(flag) != std::string::npos);
  }

  TEST_CASE("json schemas") {
    const auto u = cli({"--json", "ustat", "--matrix", data("counts4x4.csv"), "--kernel", "h2"});
    REQUIRE(u.code == 0);
    const auto uj = nlohmann::json::parse(u.out);
    CHECK(keys(uj) == std::set<std::string>{"kernel", "p", "q", "rows", "cols", "value", "terms", "path"});
    CHECK(uj["terms"] == "36");
    CHECK(uj["path"] == "fast");

    const auto v = cli({"variance", "--matrix", data("counts4x4.csv"), "--kernel", "h1", "--method", "loo", "--json"});
    REQUIRE(v.code == 0);
    const auto vj = nlohmann::json::parse(v.out);
    CHECK(keys(vj) == std::set<std::string>{"kernel", "u", "v10", "v01", "V", "rho", "method", "degenerate"});
    CHECK(vj["method"] == "leave_one_out");

    const auto e = cli({"--json", "estimate", "--matrix", data("binary5x5.csv"), "--stat", "motif6", "--null", "0.1"});
    REQUIRE(e.code == 0);
    const auto ej = nlohmann::json::parse(e.out);
    CHECK(keys(ej) == std::set<std::string>{"statistic", "estimate", "variance", "std_error", "N", "alpha", "ci",
                                            "null_value", "z", "p_value", "degenerate", "tail", "warnings",
                                            "metadata"});
    CHECK(ej["N"] == 10);

    const auto c = cli({"--json", "compare", "--matrix-a", data("counts4x4.csv"), "--matrix-b", data("binary5x5.csv"),
                        "--stat", "g2"});
    REQUIRE(c.code == 0);
    CHECK(nlohmann::json::parse(c.out)["metadata"].contains("scaling"));
  }

  TEST_CASE("naive and fast paths agree through the CLI") {
    const auto a = cli({"ustat", "--matrix", data("counts4x4.csv"), "--kernel", "h6"});
    const auto b = cli({"ustat", "--matrix", data("counts4x4.csv"), "--kernel", "h6", "--naive"});
    CHECK(a.out == b.out);
  }

  TEST_CASE("sample is reproducible by default") {
    const auto a = cli({"sample", "--model", "III", "--rows", "6", "--cols", "5"});
    const auto b = cli({"sample", "--model", "III", "--rows", "6", "--cols", "5"});
    const auto c = cli({"sample", "--model", "III", "--rows", "6", "--cols", "5", "--seed", "9"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out != c.out);
    const auto path = fs::temp_directory_path() / "bipnet_cli_sample.tsv";
    CHECK(cli({"sample", "--model", "I", "--N", "20", "--rho", "0.25", "--out", path.string()}).code == 0);
    const auto text = slurp(path);
    CHECK(std::count(text.begin(), text.end(), '\n') == 5);
    CHECK(cli({"sample", "--model", "III"}).code == 1);
  }

  TEST_CASE("simulate twice gives identical output directories") {
    const auto dir = fs::temp_directory_path() / "bipnet_cli_sim";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto config = dir / "qq.json";
    std::ofstream(config) << R"({"experiment":"qq","statistic":"f2","N_list":[32],"rho_list":[0.5],"replicates":8})";
    REQUIRE(cli({"simulate", "--config", config.string(), "--output-dir", (dir / "a").string()}).code == 0);
    REQUIRE(cli({"simulate", "--config", config.string(), "--output-dir", (dir / "b").string(), "--threads", "3"})
                .code == 0);
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
      ++files;
      CHECK(slurp(entry.path()) == slurp(dir / "b" / entry.path().filename()));
    }
    CHECK(files == 2);
    const auto other = cli({"simulate", "--config", config.string(), "--output-dir", (dir / "c").string(), "--seed",
                            "5"});
    CHECK(other.code == 0);
    CHECK(slurp(dir / "c" / "qq_N32_rho0.5.csv") != slurp(dir / "a" / "qq_N32_rho0.5.csv"));
  }
}
