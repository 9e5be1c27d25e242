#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bipnet/core.hpp"
#include "bipnet/kernels.hpp"
#include "bipnet/ustat.hpp"

namespace bipnet {

/// Row share rho used to weight the row and column variance components.
/// Empirical (default) takes m / (m + n).
struct RhoPolicy {
  bool empirical = true;
  double fixed = 0.5;

  static RhoPolicy from_data() { return {}; }
  static RhoPolicy fixed_at(double rho);
  double resolve(std::size_t m, std::size_t n) const;
};

enum class VarianceMethod { direct, leave_one_out, algorithm_A, algorithm_B, algorithm_C };
std::string to_string(VarianceMethod method);

struct ConditionalMeans {
  std::vector<double> mu;  ///< per row: mean kernel value over submatrices containing the row
  std::vector<double> nu;  ///< per column
};

ConditionalMeans conditional_means(const UStatResult& base);

struct VHats {
  double v10 = 0.0;
  double v01 = 0.0;
};

/// Half mean squared pairwise difference of each vector, computed as the
/// unbiased sample variance.
VHats v_hats(std::span<const double> mu, std::span<const double> nu);

struct VarianceEstimate {
  double v10 = 0.0;
  double v01 = 0.0;
  double V = 0.0;  ///< p^2/rho * v10 + q^2/(1-rho) * v01
  double rho = 0.5;
  VarianceMethod method = VarianceMethod::direct;
  bool degenerate = false;
  double u = 0.0;      ///< the U-statistic itself
  double scale = 0.0;  ///< kernel scale used by the degeneracy threshold
};

/// Relative threshold below which V is reported as degenerate.
inline constexpr double kDegeneracyTolerance = 1e-12;

VarianceEstimate variance_from_ustat(const UStatResult& base, const RhoPolicy& rho,
                                     VarianceMethod method = VarianceMethod::direct);

VarianceEstimate variance_estimate(const BipartiteMatrix& y, const Kernel& h, const RhoPolicy& rho = {},
                                   VarianceMethod method = VarianceMethod::direct, const UStatOptions& options = {});

struct CovarianceEstimate {
  std::vector<std::string> kernel_ids;
  std::vector<double> values;  ///< U-statistic per kernel
  Eigen::MatrixXd sigma;
  double rho = 0.5;
  std::string cross_size_rule;  ///< how p, q enter off-diagonal terms
};

/// Sigma_kl = p_k p_l / rho * c10_kl + q_k q_l / (1 - rho) * c01_kl, where
/// c10, c01 are sample covariances of the per-row / per-column conditional means.
CovarianceEstimate covariance_from_ustats(std::span<const UStatResult> bases, std::vector<std::string> ids,
                                          const RhoPolicy& rho);
CovarianceEstimate covariance_estimate(const BipartiteMatrix& y, std::span<const Kernel> kernels,
                                       const RhoPolicy& rho = {}, const UStatOptions& options = {});

struct AlgorithmAOptions {
  std::size_t exhaustive_max_n = 24;  ///< m + n at or below which every pair is used
  std::size_t pair_budget = 1000000;  ///< random pairs per covariance above that
  std::uint64_t seed = 0xA1;
};

/// Classic estimator: gamma^{1,0} is the mean product of kernel values over
/// submatrix pairs sharing exactly one row and no column, minus the mean
/// product over fully disjoint pairs (gamma^{0,1} symmetrically). Unbiased,
/// but may be negative.
VarianceEstimate algorithm_A_variance(const BipartiteMatrix& y, const Kernel& h, const RhoPolicy& rho = {},
                                      const AlgorithmAOptions& options = {});

/// The direct estimator evaluated literally: each row's (column's)
/// conditional mean comes from its own enumeration of the submatrices that
/// contain it. Same value as the direct method, (p + q) times the work.
VarianceEstimate algorithm_B_variance(const BipartiteMatrix& y, const Kernel& h, const RhoPolicy& rho = {});

/// The leave-one-out form with every reduced U-statistic recomputed from
/// scratch by the matrix-operation path (u_fast).
VarianceEstimate algorithm_C_variance(const BipartiteMatrix& y, const std::string& kernel_id,
                                      const RhoPolicy& rho = {});

}  // namespace bipnet
