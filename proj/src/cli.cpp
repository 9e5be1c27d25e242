#include "bipnet/cli.hpp"

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "bipnet/core.hpp"
#include "bipnet/error.hpp"
#include "bipnet/inference.hpp"
#include "bipnet/kernels.hpp"
#include "bipnet/models.hpp"
#include "bipnet/parallel.hpp"
#include "bipnet/sim.hpp"
#include "bipnet/ustat.hpp"
#include "bipnet/varest.hpp"

namespace bipnet {

namespace {

constexpr std::uint64_t kDefaultSeed = 20240101;

using nlohmann::json;

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::usage: return 1;
    case ErrorKind::data: return 2;
    case ErrorKind::numeric: return 3;
  }
  return 2;
}

BipartiteMatrix read_matrix(const std::string& path) { return load_matrix(path, format_from_path(path)); }

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::data, path + ": " + e.what());
  }
}

ModelSpec select_model(const std::string& name, double epsilon) {
  if (name == "I") return model_one();
  if (name == "II") return model_two(epsilon);
  if (name == "III") return model_three();
  return model_from_json(read_json_file(name));
}

RhoPolicy rho_policy(const std::optional<double>& rho) {
  return rho ? RhoPolicy::fixed_at(*rho) : RhoPolicy::from_data();
}

VarianceMethod method_from_string(const std::string& s) {
  if (s == "direct") return VarianceMethod::direct;
  if (s == "loo") return VarianceMethod::leave_one_out;
  if (s == "algoA") return VarianceMethod::algorithm_A;
  if (s == "algoB") return VarianceMethod::algorithm_B;
  if (s == "algoC") return VarianceMethod::algorithm_C;
  fail(ErrorKind::usage, "unknown method '" + s + "'");
}

void print_report(std::ostream& out, const EstimateReport& r, bool as_json) {
  if (as_json) {
    out << r.to_json().dump(2) << "\n";
    return;
  }
  out << "statistic   " << r.statistic_id << "\n"
      << "estimate    " << num(r.estimate) << "\n"
      << "variance    " << num(r.variance) << "\n"
      << "std_error   " << num(r.std_error()) << "\n"
      << "N           " << r.N << "\n"
      << "ci          [" << num(r.ci.lo) << ", " << num(r.ci.hi) << "] (alpha " << num(r.alpha) << ")\n";
  if (r.null_value) out << "null        " << num(*r.null_value) << "\n";
  if (r.z) out << "z           " << num(*r.z) << "\n";
  if (r.p_value) out << "p_value     " << num(*r.p_value) << " (" << to_string(r.tail) << ")\n";
  out << "degenerate  " << (r.degenerate ? "yes" : "no") << "\n";
  for (const auto& w : r.warnings) out << "warning     " << w << "\n";
}

struct Globals {
  bool json = false;
  std::uint64_t seed = kDefaultSeed;
  std::size_t threads = 0;
};

}  // namespace

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"U-statistics inference for bipartite (row-column exchangeable) networks"};
  app.footer(
      "Exit codes: 0 success, 1 usage, 2 data or validation error, 3 numeric error or degenerate variance.\n"
      "The BIPNET_THREADS environment variable sets the default worker cap (--threads overrides it).");
  app.require_subcommand(1);
  Globals g;
  app.add_flag("--json", g.json, "Machine-readable JSON output");
  auto* seed_opt = app.add_option("--seed", g.seed, "Random seed (default " + std::to_string(kDefaultSeed) + ")");
  app.add_option("--threads", g.threads, "Worker thread cap (0 keeps the default)");

  // sample
  auto* cmd_sample = app.add_subcommand("sample", "Draw a matrix from a generative model");
  std::string model_name = "III";
  double epsilon = 0.0;
  std::size_t rows = 0, cols = 0, total = 0;
  double split = 0.5;
  std::string out_path, latents_path;
  cmd_sample->add_option("--model", model_name, "Reference model I, II, III or a JSON model file")->capture_default_str();
  cmd_sample->add_option("--epsilon", epsilon, "Epsilon of model II")->capture_default_str();
  cmd_sample->add_option("--rows", rows, "Number of rows m");
  cmd_sample->add_option("--cols", cols, "Number of columns n");
  cmd_sample->add_option("--N", total, "Total size N (m = floor(rho N)) instead of --rows/--cols");
  cmd_sample->add_option("--rho", split, "Row share used with --N")->capture_default_str();
  cmd_sample->add_option("--out", out_path, "Output matrix (.csv or .tsv); stdout CSV when omitted");
  cmd_sample->add_option("--latents", latents_path, "Write the row/column latents as JSON");

  // ustat
  auto* cmd_ustat = app.add_subcommand("ustat", "Compute a U-statistic");
  std::string matrix_path, kernel_sel;
  bool naive = false, force = false;
  cmd_ustat->add_option("--matrix", matrix_path, "Matrix file (.csv or .tsv)")->required();
  cmd_ustat->add_option("--kernel", kernel_sel, "Builtin kernel name or JSON kernel file")->required();
  cmd_ustat->add_flag("--naive", naive, "Enumerate every submatrix even when a closed form exists");
  cmd_ustat->add_flag("--force", force, "Bypass the enumeration size guard");

  // variance
  auto* cmd_var = app.add_subcommand("variance", "Estimate the asymptotic variance of a U-statistic");
  std::string method = "direct";
  std::optional<double> rho_fixed;
  cmd_var->add_option("--matrix", matrix_path, "Matrix file")->required();
  cmd_var->add_option("--kernel", kernel_sel, "Builtin kernel name or JSON kernel file")->required();
  cmd_var->add_option("--method", method, "direct, loo, algoA, algoB or algoC")
      ->check(CLI::IsMember({"direct", "loo", "algoA", "algoB", "algoC"}))
      ->capture_default_str();
  cmd_var->add_option("--rho", rho_fixed, "Fixed rho (default m/(m+n))");
  cmd_var->add_flag("--force", force, "Bypass the enumeration size guard");

  // estimate
  auto* cmd_est = app.add_subcommand("estimate", "Estimate a network statistic with a confidence interval");
  std::string stat;
  std::optional<double> null_value;
  double alpha = 0.05;
  std::string tail = "two-sided";
  cmd_est->add_option("--matrix", matrix_path, "Matrix file")->required();
  cmd_est->add_option("--stat", stat, "f2, g2, d, motif6 or motif14")
      ->required()
      ->check(CLI::IsMember({"f2", "g2", "d", "motif6", "motif14"}));
  cmd_est->add_option("--null", null_value, "Null value for z and p");
  cmd_est->add_option("--alpha", alpha, "Significance level of the interval")->capture_default_str();
  cmd_est->add_option("--tail", tail, "two-sided, less or greater")->capture_default_str();
  cmd_est->add_option("--rho", rho_fixed, "Fixed rho (default m/(m+n))");

  // compare
  auto* cmd_cmp = app.add_subcommand("compare", "Test equality of a statistic between two networks");
  std::string matrix_a, matrix_b;
  cmd_cmp->add_option("--matrix-a", matrix_a, "First network")->required();
  cmd_cmp->add_option("--matrix-b", matrix_b, "Second network")->required();
  cmd_cmp->add_option("--stat", stat, "f2, g2, d, motif6 or motif14")
      ->required()
      ->check(CLI::IsMember({"f2", "g2", "d", "motif6", "motif14"}));
  cmd_cmp->add_option("--alpha", alpha, "Significance level of the interval")->capture_default_str();
  cmd_cmp->add_option("--tail", tail, "two-sided, less or greater")->capture_default_str();
  cmd_cmp->add_option("--rho", rho_fixed, "Fixed rho (default m/(m+n))");

  // simulate
  auto* cmd_sim = app.add_subcommand("simulate", "Run a simulation study from a JSON config");
  std::string config_path, output_dir;
  std::optional<std::size_t> replicates;
  cmd_sim->add_option("--config", config_path, "Experiment config (JSON)")->required();
  cmd_sim->add_option("--output-dir", output_dir, "Overrides output_dir");
  cmd_sim->add_option("--replicates", replicates, "Overrides replicates");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (g.threads > 0) set_thread_count(g.threads);

    if (cmd_sample->parsed()) {
      std::size_t m = rows, n = cols;
      if (total > 0) std::tie(m, n) = split_size(total, split);
      if (m == 0 || n == 0) fail(ErrorKind::usage, "give --rows and --cols, or --N");
      const ModelSpec model = select_model(model_name, epsilon);
      const SampleWithLatents s = sample(model, m, n, g.seed);
      if (!latents_path.empty()) {
        std::ofstream lat(latents_path);
        if (!lat) fail(ErrorKind::data, "cannot write " + latents_path);
        lat << json{{"xi", s.xi}, {"eta", s.eta}}.dump(2) << "\n";
      }
      if (!out_path.empty()) {
        save_matrix(s.matrix, out_path, format_from_path(out_path));
        if (g.json) {
          out << json{{"rows", m}, {"cols", n}, {"seed", g.seed}, {"model", model.description}, {"out", out_path}}
                     .dump(2)
              << "\n";
        } else {
          out << "wrote " << m << "x" << n << " sample of " << model.description << " to " << out_path << "\n";
        }
      } else {
        out << format_matrix(s.matrix, MatrixFormat::csv);
      }
      return 0;
    }

    if (cmd_ustat->parsed()) {
      const BipartiteMatrix y = read_matrix(matrix_path);
      const Kernel h = resolve_kernel(kernel_sel);
      UStatOptions o;
      o.force = force;
      o.allow_fast = !naive;
      const UStatResult u = compute_ustat(y, h, o);
      const bool fast = !naive && has_fast_path(h);
      if (g.json) {
        out << json{{"kernel", h.id()},      {"p", h.p()}, {"q", h.q()}, {"rows", y.rows()}, {"cols", y.cols()},
                    {"value", u.value},       {"terms", to_string(u.total_terms)},
                    {"path", fast ? "fast" : "naive"}}
                   .dump(2)
            << "\n";
      } else {
        out << num(u.value) << "\n";
      }
      return 0;
    }

    if (cmd_var->parsed()) {
      const BipartiteMatrix y = read_matrix(matrix_path);
      const Kernel h = resolve_kernel(kernel_sel);
      UStatOptions o;
      o.force = force;
      const VarianceEstimate v = variance_estimate(y, h, rho_policy(rho_fixed), method_from_string(method), o);
      if (g.json) {
        out << json{{"kernel", h.id()}, {"u", v.u},           {"v10", v.v10},
                    {"v01", v.v01},     {"V", v.V},           {"rho", v.rho},
                    {"method", to_string(v.method)},          {"degenerate", v.degenerate}}
                   .dump(2)
            << "\n";
      } else {
        out << "u           " << num(v.u) << "\n"
            << "v10         " << num(v.v10) << "\n"
            << "v01         " << num(v.v01) << "\n"
            << "V           " << num(v.V) << "\n"
            << "rho         " << num(v.rho) << "\n"
            << "method      " << to_string(v.method) << "\n"
            << "degenerate  " << (v.degenerate ? "yes" : "no") << "\n";
      }
      return 0;
    }

    InferenceOptions io;
    io.alpha = alpha;
    io.tail = tail_from_string(tail);
    io.rho = rho_policy(rho_fixed);

    if (cmd_est->parsed()) {
      const BipartiteMatrix y = read_matrix(matrix_path);
      print_report(out, statistic_report(y, stat, null_value, io), g.json);
      return 0;
    }

    if (cmd_cmp->parsed()) {
      const BipartiteMatrix a = read_matrix(matrix_a);
      const BipartiteMatrix b = read_matrix(matrix_b);
      print_report(out, compare_networks(a, b, stat, io), g.json);
      return 0;
    }

    if (cmd_sim->parsed()) {
      ExperimentConfig c = config_from_json(read_json_file(config_path));
      if (!output_dir.empty()) c.output_dir = output_dir;
      if (replicates) c.replicates = *replicates;
      if (seed_opt->count() > 0) c.seed = g.seed;
      const SimulationResult r = run_experiment(c);
      if (g.json) {
        out << r.summary.dump(2) << "\n";
      } else {
        for (const auto& q : r.qq)
          out << q.name << ": " << q.z.size() << " replicates, " << q.degenerate << " degenerate, KS " << num(q.ks)
              << "\n";
        for (const auto& row : r.coverage)
          out << "N=" << row.N << " rho=" << num(row.rho) << " param=" << num(row.param) << ": coverage "
              << num(row.coverage) << " band [" << num(row.band_lo) << ", " << num(row.band_hi) << "]\n";
        for (const auto& b : r.bench)
          out << "N=" << b.N << " " << b.kernel << " " << b.algorithm << ": " << num(b.mean_seconds) << " s, estimate "
              << num(b.estimate_mean) << "\n";
        if (!c.output_dir.empty()) out << "outputs in " << c.output_dir.string() << "\n";
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace bipnet
