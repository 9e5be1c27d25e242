#include "bipnet/inference.hpp"

#include <algorithm>
#include <cmath>

#include "bipnet/error.hpp"
#include "bipnet/normal.hpp"

namespace bipnet {

Tail tail_from_string(const std::string& s) {
  if (s == "two-sided" || s == "two_sided") return Tail::two_sided;
  if (s == "less") return Tail::less;
  if (s == "greater") return Tail::greater;
  fail(ErrorKind::usage, "unknown tail '" + s + "' (expected two-sided, less or greater)");
}

std::string to_string(Tail tail) {
  switch (tail) {
    case Tail::two_sided: return "two-sided";
    case Tail::less: return "less";
    case Tail::greater: return "greater";
  }
  return "two-sided";
}

Interval confidence_interval(double estimate, double V, std::size_t N, double alpha) {
  if (!(V >= 0.0)) fail(ErrorKind::numeric, "variance must be nonnegative");
  if (N < 1) fail(ErrorKind::usage, "N must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::usage, "alpha must lie strictly between 0 and 1");
  const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(V / static_cast<double>(N));
  return {estimate - half, estimate + half};
}

double p_value(double z, Tail tail) {
  switch (tail) {
    case Tail::less: return normal_cdf(z);
    case Tail::greater: return normal_sf(z);
    case Tail::two_sided: break;
  }
  return std::min(1.0, 2.0 * normal_sf(std::fabs(z)));
}

double EstimateReport::std_error() const { return std::sqrt(variance / static_cast<double>(N)); }

nlohmann::json EstimateReport::to_json() const {
  nlohmann::json j = {{"statistic", statistic_id},
                      {"estimate", estimate},
                      {"variance", variance},
                      {"std_error", std_error()},
                      {"N", N},
                      {"alpha", alpha},
                      {"ci", {ci.lo, ci.hi}},
                      {"degenerate", degenerate},
                      {"tail", to_string(tail)},
                      {"warnings", warnings},
                      {"metadata", metadata}};
  j["null_value"] = null_value ? nlohmann::json(*null_value) : nlohmann::json(nullptr);
  j["z"] = z ? nlohmann::json(*z) : nlohmann::json(nullptr);
  j["p_value"] = p_value ? nlohmann::json(*p_value) : nlohmann::json(nullptr);
  return j;
}

namespace {

void require_non_degenerate(const EstimateReport& r) {
  if (r.degenerate) {
    fail(ErrorKind::numeric, "the variance of '" + r.statistic_id +
                                 "' is degenerate on this matrix; studentization is undefined, try another "
                                 "kernel or statistic");
  }
}

// Fills the interval and, when a null value is set, z and p.
void finish(EstimateReport& r, const InferenceOptions& options) {
  r.alpha = options.alpha;
  r.tail = options.tail;
  r.variance = std::max(r.variance, 0.0);
  if (r.degenerate) {
    r.ci = {r.estimate, r.estimate};
    r.warnings.push_back("degenerate variance: zero-width interval");
  } else {
    r.ci = confidence_interval(r.estimate, r.variance, r.N, options.alpha);
  }
  if (r.null_value) {
    require_non_degenerate(r);
    r.z = std::sqrt(static_cast<double>(r.N) / r.variance) * (r.estimate - *r.null_value);
    r.p_value = p_value(*r.z, options.tail);
  }
}

Eigen::VectorXd ustat_vector(const CovarianceEstimate& cov) {
  return Eigen::Map<const Eigen::VectorXd>(cov.values.data(), static_cast<Eigen::Index>(cov.values.size()));
}

}  // namespace

DeltaSpec ratio_spec(std::string id, Kernel numerator, Kernel denominator) {
  DeltaSpec s;
  s.id = std::move(id);
  s.kernels = {std::move(numerator), std::move(denominator)};
  s.g = [](const Eigen::VectorXd& u) { return u(0) / u(1); };
  s.grad_g = [](const Eigen::VectorXd& u) {
    Eigen::VectorXd g(2);
    g << 1.0 / u(1), -u(0) / (u(1) * u(1));
    return g;
  };
  return s;
}

double t_value(const Eigen::VectorXd& u) {
  const double d = u(3);
  return u(0) / (d * d * d) + u(1) * u(2) / (d * d * d * d);
}

Eigen::VectorXd t_gradient(const Eigen::VectorXd& u) {
  const double a = u(0), b = u(1), c = u(2), d = u(3);
  const double d3 = d * d * d, d4 = d3 * d, d5 = d4 * d;
  Eigen::VectorXd g(4);
  g << 1.0 / d3, c / d4, b / d4, -3.0 * a / d4 - 4.0 * b * c / d5;
  return g;
}

DeltaSpec d_spec() {
  DeltaSpec s;
  s.id = "d";
  s.kernels = {builtin("hA"), builtin("hB"), builtin("hC"), builtin("hD")};
  s.g = t_value;
  s.grad_g = t_gradient;
  return s;
}

EstimateReport studentized(const BipartiteMatrix& y, const Kernel& h, std::optional<double> null_value,
                           const InferenceOptions& options) {
  const VarianceEstimate v = variance_estimate(y, h, options.rho, VarianceMethod::direct, options.ustat);
  EstimateReport r;
  r.statistic_id = h.id();
  r.estimate = v.u;
  r.variance = v.V;
  r.N = y.rows() + y.cols();
  r.degenerate = v.degenerate;
  r.null_value = null_value;
  r.metadata = {{"kernel", h.id()}, {"rho", v.rho}, {"v10", v.v10}, {"v01", v.v01}};
  require_non_degenerate(r);
  finish(r, options);
  return r;
}

EstimateReport delta_from_covariance(const CovarianceEstimate& cov, const DeltaSpec& spec, std::size_t N,
                                     std::optional<double> null_value, const InferenceOptions& options) {
  const Eigen::VectorXd u = ustat_vector(cov);
  const Eigen::VectorXd grad = spec.grad_g(u);
  EstimateReport r;
  r.statistic_id = spec.id;
  r.estimate = spec.g(u);
  if (!std::isfinite(r.estimate) || !grad.allFinite()) {
    fail(ErrorKind::numeric, "statistic '" + spec.id + "' is undefined at the observed U-statistics");
  }
  r.variance = grad.dot(cov.sigma * grad);
  const double scale = grad.cwiseAbs().dot(u.cwiseAbs());
  r.degenerate = r.variance <= kDegeneracyTolerance * scale * scale;
  r.N = N;
  r.null_value = null_value;
  r.metadata = {{"kernels", cov.kernel_ids},
                {"ustats", cov.values},
                {"gradient", std::vector<double>(grad.data(), grad.data() + grad.size())},
                {"rho", cov.rho},
                {"cross_size_rule", cov.cross_size_rule}};
  finish(r, options);
  return r;
}

EstimateReport delta_estimate(const BipartiteMatrix& y, const DeltaSpec& spec, std::optional<double> null_value,
                              const InferenceOptions& options) {
  const CovarianceEstimate cov = covariance_estimate(y, spec.kernels, options.rho, options.ustat);
  return delta_from_covariance(cov, spec, y.rows() + y.cols(), null_value, options);
}

EstimateReport f2_report(const BipartiteMatrix& y, Axis axis, std::optional<double> null_value,
                         const InferenceOptions& options) {
  if (y.rows() < 2 || y.cols() < 2) fail(ErrorKind::data, "F2/G2 need at least a 2x2 matrix");
  const bool row = axis == Axis::row;
  const DeltaSpec spec = ratio_spec(row ? "f2" : "g2", builtin(row ? "h1" : "hC"), builtin("h2"));
  const CovarianceEstimate cov = covariance_estimate(y, spec.kernels, options.rho, options.ustat);
  const double u1 = cov.values[0], u2 = cov.values[1];
  if (!(u2 > 0.0)) fail(ErrorKind::data, "U^{h2} is not positive (empty network); the ratio is undefined");
  EstimateReport r = delta_from_covariance(cov, spec, y.rows() + y.cols(), null_value, options);
  // Expanded form of grad' Sigma grad for the ratio.
  const double f = u1 / u2;
  r.variance = std::max(0.0, (cov.sigma(0, 0) - 2.0 * f * cov.sigma(0, 1) + f * f * cov.sigma(1, 1)) / (u2 * u2));
  if (r.degenerate) r.variance = 0.0;
  r.warnings.clear();
  r.z.reset();
  r.p_value.reset();
  finish(r, options);
  return r;
}

EstimateReport d_report(const BipartiteMatrix& y, std::optional<double> null_value, const InferenceOptions& options) {
  if (y.rows() < 2 || y.cols() < 2) fail(ErrorKind::data, "d needs at least a 2x2 matrix");
  const DeltaSpec spec = d_spec();
  const CovarianceEstimate cov = covariance_estimate(y, spec.kernels, options.rho, options.ustat);
  if (!(cov.values[3] > 0.0)) fail(ErrorKind::data, "U^{hD} is not positive (empty network); d is undefined");
  EstimateReport r = delta_from_covariance(cov, spec, y.rows() + y.cols(), null_value, options);
  if (y.is_binary()) {
    r.warnings.push_back("binary data: the hA factorial moment targets count (Poisson) data, d may be biased");
  }
  return r;
}

EstimateReport motif_report(const BipartiteMatrix& y, int motif, std::optional<double> null_value,
                            const InferenceOptions& options) {
  if (motif != 6 && motif != 14) fail(ErrorKind::usage, "motif must be 6 or 14");
  if (!y.is_binary()) fail(ErrorKind::data, "motif frequencies require a binary (0/1) matrix");
  if (y.rows() < 3 || y.cols() < 3) fail(ErrorKind::data, "motif inference needs at least a 3x3 matrix");
  const Kernel h = builtin(motif == 6 ? "h6" : "h14");
  const VarianceEstimate v = variance_estimate(y, h, options.rho, VarianceMethod::direct, options.ustat);
  EstimateReport r;
  r.statistic_id = "motif" + std::to_string(motif);
  r.estimate = v.u;
  r.variance = v.V;
  r.N = y.rows() + y.cols();
  r.degenerate = v.degenerate;
  r.null_value = null_value;
  r.metadata = {{"kernel", h.id()}, {"rho", v.rho}, {"v10", v.v10}, {"v01", v.v01}};
  finish(r, options);
  return r;
}

const std::vector<std::string>& statistic_names() {
  static const std::vector<std::string> names = {"motif6", "motif14", "f2", "g2", "d"};
  return names;
}

EstimateReport statistic_report(const BipartiteMatrix& y, const std::string& statistic,
                                std::optional<double> null_value, const InferenceOptions& options) {
  if (statistic == "f2") return f2_report(y, Axis::row, null_value, options);
  if (statistic == "g2") return f2_report(y, Axis::col, null_value, options);
  if (statistic == "d") return d_report(y, null_value, options);
  if (statistic == "motif6") return motif_report(y, 6, null_value, options);
  if (statistic == "motif14") return motif_report(y, 14, null_value, options);
  fail(ErrorKind::usage, "unknown statistic '" + statistic + "' (expected motif6, motif14, f2, g2 or d)");
}

EstimateReport compare_networks(const BipartiteMatrix& a, const BipartiteMatrix& b, const std::string& statistic,
                                const InferenceOptions& options) {
  const EstimateReport ra = statistic_report(a, statistic, {}, options);
  const EstimateReport rb = statistic_report(b, statistic, {}, options);
  if (ra.degenerate || rb.degenerate) {
    fail(ErrorKind::numeric, "the variance of '" + statistic + "' is degenerate on network " +
                                 (ra.degenerate ? "A" : "B") + "; the comparison is undefined");
  }
  EstimateReport r;
  r.statistic_id = statistic;
  r.estimate = ra.estimate - rb.estimate;
  r.N = std::min(ra.N, rb.N);
  const double se2 = ra.variance / static_cast<double>(ra.N) + rb.variance / static_cast<double>(rb.N);
  r.variance = se2 * static_cast<double>(r.N);
  r.alpha = options.alpha;
  r.tail = options.tail;
  r.ci = confidence_interval(r.estimate, r.variance, r.N, options.alpha);
  r.null_value = 0.0;
  r.z = r.estimate / std::sqrt(se2);
  r.p_value = p_value(*r.z, options.tail);
  r.metadata = {{"estimate_a", ra.estimate},
                {"estimate_b", rb.estimate},
                {"variance_a", ra.variance},
                {"variance_b", rb.variance},
                {"N_a", ra.N},
                {"N_b", rb.N},
                {"scaling", "squared standard error V_A/N_A + V_B/N_B; N reported as min(N_A, N_B)"},
                {"independence", "networks A and B are assumed independent"}};
  for (const auto& w : ra.warnings) r.warnings.push_back("A: " + w);
  for (const auto& w : rb.warnings) r.warnings.push_back("B: " + w);
  return r;
}

}  // namespace bipnet
