#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bipnet/core.hpp"
#include "bipnet/kernels.hpp"

namespace bipnet {

enum class Emission { bernoulli, poisson };

std::string to_string(Emission e);
Emission emission_from_string(const std::string& s);

/// Degree/strength marginal of a product graphon: either a step function
/// or the power law (alpha + 1) x^alpha. Both have closed-form moments.
class Marginal {
 public:
  /// edges: 0 = e_0 < e_1 < ... < e_k = 1; values[t] holds on (e_t, e_{t+1}]
  /// (the first piece includes 0).
  static Marginal step(std::vector<double> edges, std::vector<double> values);
  static Marginal power(double alpha);
  static Marginal uniform() { return power(0.0); }
  /// Power law whose second moment equals f2 (f2 >= 1).
  static Marginal power_with_second_moment(double f2);

  double operator()(double x) const;
  double integral() const;
  double second_moment() const;
  double sup() const;
  bool is_power() const noexcept { return power_; }
  double alpha() const noexcept { return alpha_; }
  nlohmann::json to_json() const;

 private:
  bool power_ = true;
  double alpha_ = 0.0;
  std::vector<double> edges_;
  std::vector<double> values_;
};

Marginal marginal_from_json(const nlohmann::json& doc);

using Graphon = std::function<double(double, double)>;

/// Generative row-column exchangeable model: latents xi, eta ~ U[0,1],
/// Y_ij ~ Bernoulli(w(xi_i, eta_j)) or Poisson(w(xi_i, eta_j)).
///
/// `analytic` holds known truths: expected kernel values keyed by kernel id
/// and statistic values keyed by F2, G2, d, lambda.
struct ModelSpec {
  Graphon graphon;
  Emission emission = Emission::poisson;
  std::string description;
  std::map<std::string, double> analytic;

  std::optional<double> truth(const std::string& key) const;
};

/// Product graphon lambda f(xi) g(eta).
ModelSpec bedd(double lambda, const Marginal& f, const Marginal& g, Emission emission);

/// Block graphon pi[s(xi)][t(eta)] with group thresholds at cumulative alpha, beta.
ModelSpec lbm(const std::vector<double>& alpha, const std::vector<double>& beta,
              const std::vector<std::vector<double>>& pi, Emission emission);

/// Distance between the normalized Model II(epsilon) graphon and its product form.
double d_true(double epsilon);

ModelSpec model_one();
ModelSpec model_two(double epsilon);
ModelSpec model_three(double f2 = 3.0, double g2 = 2.0, double lambda = 1.0);

/// {type: "bedd"|"lbm"|"paper", emission, ...}; see README for the fields.
ModelSpec model_from_json(const nlohmann::json& doc);

struct SampleWithLatents {
  BipartiteMatrix matrix;
  std::vector<double> xi;
  std::vector<double> eta;
};

/// Entry (i, j) draws from the substream keyed by (seed, i, j), so the
/// result does not depend on the thread schedule.
SampleWithLatents sample(const ModelSpec& model, std::size_t m, std::size_t n, std::uint64_t seed);

struct MonteCarloValue {
  double value = 0.0;
  double std_error = 0.0;
  bool analytic = false;
};

/// Expected kernel value: analytic when the model knows it, otherwise plain
/// Monte Carlo over independent p x q draws.
MonteCarloValue true_expectation(const ModelSpec& model, const Kernel& h, std::size_t mc_budget,
                                 std::uint64_t seed = 0x5eed);
MonteCarloValue monte_carlo_expectation(const ModelSpec& model, const Kernel& h, std::size_t draws,
                                        std::uint64_t seed);

/// Variance of the conditional expectation of h given one row latent
/// (axis row) or one column latent (axis col), by nested Monte Carlo with
/// the inner-noise bias removed.
MonteCarloValue oracle_conditional_variance(const ModelSpec& model, const Kernel& h, Axis axis,
                                            std::size_t n_outer, std::size_t n_inner, std::uint64_t seed);

}  // namespace bipnet
