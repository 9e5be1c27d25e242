#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "bipnet/core.hpp"
#include "bipnet/kernels.hpp"
#include "bipnet/varest.hpp"

namespace bipnet {

enum class Tail { two_sided, less, greater };
Tail tail_from_string(const std::string& s);
std::string to_string(Tail tail);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// estimate -/+ z_{1 - alpha/2} sqrt(V / N); alpha is the significance level.
Interval confidence_interval(double estimate, double V, std::size_t N, double alpha);

/// p-value of a standard normal statistic.
double p_value(double z, Tail tail = Tail::two_sided);

struct EstimateReport {
  std::string statistic_id;
  double estimate = 0.0;
  double variance = 0.0;  ///< asymptotic variance of sqrt(N) (estimate - target)
  std::size_t N = 0;
  double alpha = 0.05;
  Interval ci;
  std::optional<double> null_value;
  std::optional<double> z;
  std::optional<double> p_value;
  Tail tail = Tail::two_sided;
  bool degenerate = false;
  std::vector<std::string> warnings;
  nlohmann::json metadata = nlohmann::json::object();

  double std_error() const;
  nlohmann::json to_json() const;
};

struct InferenceOptions {
  RhoPolicy rho{};
  double alpha = 0.05;
  Tail tail = Tail::two_sided;
  UStatOptions ustat{};
};

/// Smooth function of a vector of U-statistics and its gradient.
struct DeltaSpec {
  std::string id;
  std::vector<Kernel> kernels;
  std::function<double(const Eigen::VectorXd&)> g;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad_g;
};

/// kappa(u1, u2) = u1 / u2.
DeltaSpec ratio_spec(std::string id, Kernel numerator, Kernel denominator);
/// t(A, B, C, D) = A / D^3 + B C / D^4 over (hA, hB, hC, hD).
DeltaSpec d_spec();
double t_value(const Eigen::VectorXd& u);
Eigen::VectorXd t_gradient(const Eigen::VectorXd& u);

/// Report for a single U-statistic; z and p against null_value when given.
EstimateReport studentized(const BipartiteMatrix& y, const Kernel& h, std::optional<double> null_value,
                           const InferenceOptions& options = {});

/// Delta-method report from an already computed covariance estimate.
EstimateReport delta_from_covariance(const CovarianceEstimate& cov, const DeltaSpec& spec, std::size_t N,
                                     std::optional<double> null_value, const InferenceOptions& options = {});
EstimateReport delta_estimate(const BipartiteMatrix& y, const DeltaSpec& spec, std::optional<double> null_value,
                              const InferenceOptions& options = {});

/// F2 (axis row, h1 / h2) or G2 (axis col, hC / h2).
EstimateReport f2_report(const BipartiteMatrix& y, Axis axis, std::optional<double> null_value = {},
                         const InferenceOptions& options = {});
/// Distance of the normalized graphon to its product form.
EstimateReport d_report(const BipartiteMatrix& y, std::optional<double> null_value = {},
                        const InferenceOptions& options = {});
/// Frequency of motif 6 or 14; binary matrices only.
EstimateReport motif_report(const BipartiteMatrix& y, int motif, std::optional<double> null_value = {},
                            const InferenceOptions& options = {});

/// Statistic names: motif6, motif14, f2, g2, d.
const std::vector<std::string>& statistic_names();
EstimateReport statistic_report(const BipartiteMatrix& y, const std::string& statistic,
                                std::optional<double> null_value = {}, const InferenceOptions& options = {});

/// Two-sample test of equal statistic values between independent networks:
/// delta = theta(A) - theta(B), Z = delta / sqrt(V_A / N_A + V_B / N_B).
EstimateReport compare_networks(const BipartiteMatrix& a, const BipartiteMatrix& b, const std::string& statistic,
                                const InferenceOptions& options = {});

}  // namespace bipnet
