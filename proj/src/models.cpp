#include "bipnet/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "bipnet/error.hpp"
#include "bipnet/parallel.hpp"
#include "bipnet/rng.hpp"

namespace bipnet {

std::string to_string(Emission e) { return e == Emission::bernoulli ? "bernoulli" : "poisson"; }

Emission emission_from_string(const std::string& s) {
  if (s == "bernoulli") return Emission::bernoulli;
  if (s == "poisson") return Emission::poisson;
  fail(ErrorKind::data, "unknown emission '" + s + "' (expected bernoulli or poisson)");
}

// ---------------------------------------------------------------- marginals

Marginal Marginal::step(std::vector<double> edges, std::vector<double> values) {
  if (values.empty() || edges.size() != values.size() + 1)
    fail(ErrorKind::data, "step marginal needs k values and k+1 edges");
  if (std::fabs(edges.front()) > 1e-12 || std::fabs(edges.back() - 1.0) > 1e-12)
    fail(ErrorKind::data, "step marginal edges must start at 0 and end at 1");
  for (std::size_t t = 1; t < edges.size(); ++t)
    if (!(edges[t] > edges[t - 1])) fail(ErrorKind::data, "step marginal edges must be strictly increasing");
  for (const double v : values)
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::data, "step marginal values must be positive and finite");
  Marginal m;
  m.power_ = false;
  m.edges_ = std::move(edges);
  m.values_ = std::move(values);
  return m;
}

Marginal Marginal::power(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail(ErrorKind::data, "power-law exponent must be nonnegative");
  Marginal m;
  m.alpha_ = alpha;
  return m;
}

Marginal Marginal::power_with_second_moment(double f2) {
  if (!(f2 >= 1.0)) fail(ErrorKind::data, "second moment of a normalized marginal must be >= 1");
  // (a+1)^2 / (2a+1) = f2  <=>  a^2 + 2(1-f2) a + (1-f2) = 0, positive root.
  return power((f2 - 1.0) + std::sqrt(f2 * (f2 - 1.0)));
}

double Marginal::operator()(double x) const {
  if (power_) return (alpha_ + 1.0) * std::pow(x, alpha_);
  const auto it = std::lower_bound(edges_.begin() + 1, edges_.end() - 1, x);
  return values_[static_cast<std::size_t>(it - (edges_.begin() + 1))];
}

double Marginal::integral() const {
  if (power_) return 1.0;
  double total = 0.0;
  for (std::size_t t = 0; t < values_.size(); ++t) total += values_[t] * (edges_[t + 1] - edges_[t]);
  return total;
}

double Marginal::second_moment() const {
  if (power_) return (alpha_ + 1.0) * (alpha_ + 1.0) / (2.0 * alpha_ + 1.0);
  double total = 0.0;
  for (std::size_t t = 0; t < values_.size(); ++t) total += values_[t] * values_[t] * (edges_[t + 1] - edges_[t]);
  return total;
}

double Marginal::sup() const {
  if (power_) return alpha_ + 1.0;
  return *std::max_element(values_.begin(), values_.end());
}

nlohmann::json Marginal::to_json() const {
  if (power_) return {{"type", "power"}, {"alpha", alpha_}};
  return {{"type", "step"}, {"edges", edges_}, {"values", values_}};
}

Marginal marginal_from_json(const nlohmann::json& doc) {
  if (doc.is_string() && doc.get<std::string>() == "uniform") return Marginal::uniform();
  const auto type = doc.at("type").get<std::string>();
  if (type == "uniform") return Marginal::uniform();
  if (type == "power") {
    if (doc.contains("second_moment")) return Marginal::power_with_second_moment(doc.at("second_moment").get<double>());
    return Marginal::power(doc.at("alpha").get<double>());
  }
  if (type == "step") return Marginal::step(doc.at("edges").get<std::vector<double>>(), doc.at("values").get<std::vector<double>>());
  fail(ErrorKind::data, "unknown marginal type '" + type + "'");
}

std::optional<double> ModelSpec::truth(const std::string& key) const {
  const auto it = analytic.find(key);
  if (it == analytic.end()) return std::nullopt;
  return it->second;
}

// ------------------------------------------------------------------- models

ModelSpec bedd(double lambda, const Marginal& f, const Marginal& g, Emission emission) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) fail(ErrorKind::data, "BEDD lambda must be positive");
  for (const auto* m : {&f, &g}) {
    const double integral = m->integral();
    if (std::fabs(integral - 1.0) > 1e-9) {
      std::ostringstream msg;
      msg.precision(12);
      msg << "BEDD marginal is not normalized: integral = " << integral;
      fail(ErrorKind::data, msg.str());
    }
  }
  const double sup_w = lambda * f.sup() * g.sup();
  if (emission == Emission::bernoulli && sup_w > 1.0 + 1e-9) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "Bernoulli BEDD requires lambda*sup f*sup g <= 1, got " << sup_w;
    fail(ErrorKind::data, msg.str());
  }
  ModelSpec model;
  model.graphon = [lambda, f, g](double x, double y) { return lambda * f(x) * g(y); };
  model.emission = emission;
  std::ostringstream desc;
  desc << to_string(emission) << " BEDD, lambda=" << lambda;
  model.description = desc.str();
  const double f2 = f.second_moment();
  const double g2 = g.second_moment();
  const double l2 = lambda * lambda;
  const double l3 = l2 * lambda;
  model.analytic = {
      {"hD", lambda},   {"hB", l2 * f2},           {"h1", l2 * f2},      {"hC", l2 * g2},
      {"h2", l2},       {"hA2", l3 * f2 * g2},     {"h6", l2 * l2 * f2 * f2 * g2 * g2},
      {"lambda", lambda}, {"F2", f2},              {"G2", g2},           {"d", 0.0},
  };
  // Y(Y-1) has conditional mean w^2 under Poisson and vanishes under Bernoulli.
  const double ha1 = emission == Emission::poisson ? l3 * f2 * g2 : 0.0;
  model.analytic["hA1"] = ha1;
  model.analytic["hA"] = ha1 - 2.0 * l3 * f2 * g2;
  return model;
}

namespace {

void check_probability_vector(const std::vector<double>& v, const char* name) {
  if (v.empty()) fail(ErrorKind::data, std::string(name) + " must not be empty");
  double total = 0.0;
  for (const double x : v) {
    if (!(x >= 0.0)) fail(ErrorKind::data, std::string(name) + " entries must be nonnegative");
    total += x;
  }
  if (std::fabs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(15);
    msg << name << " must sum to 1, sums to " << total;
    fail(ErrorKind::data, msg.str());
  }
}

std::size_t group_of(double x, const std::vector<double>& cumulative) {
  std::size_t k = 0;
  while (k + 1 < cumulative.size() && x > cumulative[k]) ++k;
  return k;
}

}  // namespace

ModelSpec lbm(const std::vector<double>& alpha, const std::vector<double>& beta,
              const std::vector<std::vector<double>>& pi, Emission emission) {
  check_probability_vector(alpha, "alpha");
  check_probability_vector(beta, "beta");
  const std::size_t K = alpha.size();
  const std::size_t L = beta.size();
  if (pi.size() != K) fail(ErrorKind::data, "pi must have one row per row group");
  for (const auto& row : pi) {
    if (row.size() != L) fail(ErrorKind::data, "pi must have one column per column group");
    for (const double x : row) {
      if (!(x >= 0.0) || !std::isfinite(x)) fail(ErrorKind::data, "pi entries must be nonnegative and finite");
      if (emission == Emission::bernoulli && x > 1.0) fail(ErrorKind::data, "Bernoulli LBM requires pi entries <= 1");
    }
  }
  std::vector<double> cum_a(K), cum_b(L);
  std::partial_sum(alpha.begin(), alpha.end(), cum_a.begin());
  std::partial_sum(beta.begin(), beta.end(), cum_b.begin());

  ModelSpec model;
  model.graphon = [pi, cum_a, cum_b](double x, double y) { return pi[group_of(x, cum_a)][group_of(y, cum_b)]; };
  model.emission = emission;
  std::ostringstream desc;
  desc << to_string(emission) << " LBM, " << K << "x" << L << " blocks";
  model.description = desc.str();

  // Exact moments of the block graphon.
  double lambda = 0.0;
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t l = 0; l < L; ++l) lambda += alpha[k] * beta[l] * pi[k][l];
  std::vector<double> row_mean(K, 0.0), col_mean(L, 0.0);  // lambda f and lambda g per group
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t l = 0; l < L; ++l) {
      row_mean[k] += beta[l] * pi[k][l];
      col_mean[l] += alpha[k] * pi[k][l];
    }
  double hb = 0.0, hc = 0.0, w2 = 0.0, ha2 = 0.0, h6 = 0.0, h14 = 0.0;
  for (std::size_t k = 0; k < K; ++k) hb += alpha[k] * row_mean[k] * row_mean[k];
  for (std::size_t l = 0; l < L; ++l) hc += beta[l] * col_mean[l] * col_mean[l];
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t l = 0; l < L; ++l) {
      w2 += alpha[k] * beta[l] * pi[k][l] * pi[k][l];
      ha2 += alpha[k] * beta[l] * pi[k][l] * row_mean[k] * col_mean[l];
    }
  // Motif expectations: sum over group labels of the latent rows/columns.
  for (std::size_t k1 = 0; k1 < K; ++k1)
    for (std::size_t k2 = 0; k2 < K; ++k2)
      for (std::size_t l1 = 0; l1 < L; ++l1)
        for (std::size_t l2 = 0; l2 < L; ++l2) {
          const double wr = alpha[k1] * alpha[k2] * beta[l1] * beta[l2];
          h6 += wr * pi[k1][l1] * pi[k1][l2] * pi[k2][l1] * pi[k2][l2];
          for (std::size_t l3 = 0; l3 < L; ++l3) {
            h14 += wr * beta[l3] * pi[k1][l1] * pi[k1][l2] * pi[k2][l2] * pi[k2][l3] * (1.0 - pi[k2][l1]) *
                   (1.0 - pi[k1][l3]);
          }
        }
  double d = 0.0;
  if (lambda > 0.0) {
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t l = 0; l < L; ++l) {
        const double diff = pi[k][l] / lambda - (row_mean[k] / lambda) * (col_mean[l] / lambda);
        d += alpha[k] * beta[l] * diff * diff;
      }
  }
  const double ha1 = emission == Emission::poisson ? w2 * lambda : 0.0;
  model.analytic = {{"hD", lambda}, {"hB", hb},       {"h1", hb},          {"hC", hc},  {"h2", lambda * lambda},
                    {"hA1", ha1},   {"hA2", ha2},     {"hA", ha1 - 2 * ha2}, {"h6", h6}, {"lambda", lambda},
                    {"d", d}};
  if (lambda > 0.0) {
    model.analytic["F2"] = hb / (lambda * lambda);
    model.analytic["G2"] = hc / (lambda * lambda);
  }
  if (emission == Emission::bernoulli) model.analytic["h14"] = h14;
  return model;
}

double d_true(double epsilon) {
  if (!(epsilon >= 0.0)) fail(ErrorKind::data, "epsilon must be nonnegative");
  const double a = 5.0 + 2.0 * epsilon;
  const double b = 9.0 + 4.0 * epsilon;
  return 64.0 * epsilon * epsilon * a * a / (b * b * b * b);
}

ModelSpec model_one() {
  ModelSpec m = lbm({0.5, 0.5}, {0.5, 0.5}, {{0.95, 0.5}, {0.5, 0.5}}, Emission::bernoulli);
  m.description = "Model I: Bernoulli LBM, alpha=beta=(.5,.5), pi=[[.95,.5],[.5,.5]]";
  return m;
}

ModelSpec model_two(double epsilon) {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) fail(ErrorKind::data, "Model II requires epsilon >= 0");
  const double lambda = 9.0 / 4.0;
  const double s = lambda / (lambda + epsilon);
  const std::vector<std::vector<double>> pi{{s * (4.0 + 2.0 * epsilon), s * 2.0}, {s * 2.0, s * (1.0 + 2.0 * epsilon)}};
  ModelSpec m = lbm({0.5, 0.5}, {0.5, 0.5}, pi, Emission::poisson);
  m.analytic["d"] = d_true(epsilon);
  std::ostringstream desc;
  desc << "Model II(" << epsilon << "): Poisson LBM, lambda=9/4";
  m.description = desc.str();
  return m;
}

ModelSpec model_three(double f2, double g2, double lambda) {
  if (!(f2 >= 1.0) || !(g2 >= 1.0) || !(lambda > 0.0))
    fail(ErrorKind::data, "Model III requires F2 >= 1, G2 >= 1 and lambda > 0");
  ModelSpec m = bedd(lambda, Marginal::power_with_second_moment(f2), Marginal::power_with_second_moment(g2),
                     Emission::poisson);
  std::ostringstream desc;
  desc << "Model III: Poisson power-law BEDD, F2=" << f2 << ", G2=" << g2 << ", lambda=" << lambda;
  m.description = desc.str();
  return m;
}

ModelSpec model_from_json(const nlohmann::json& doc) {
  try {
    const auto type = doc.at("type").get<std::string>();
    if (type == "paper") {
      const auto which = doc.at("which").get<std::string>();
      if (which == "I") return model_one();
      if (which == "II") return model_two(doc.value("epsilon", 0.0));
      if (which == "III") return model_three(doc.value("F2", 3.0), doc.value("G2", 2.0), doc.value("lambda", 1.0));
      fail(ErrorKind::data, "unknown reference model '" + which + "' (expected I, II or III)");
    }
    const Emission emission = emission_from_string(doc.value("emission", std::string("poisson")));
    if (type == "bedd") {
      return bedd(doc.at("lambda").get<double>(), marginal_from_json(doc.at("f")), marginal_from_json(doc.at("g")),
                  emission);
    }
    if (type == "lbm") {
      return lbm(doc.at("alpha").get<std::vector<double>>(), doc.at("beta").get<std::vector<double>>(),
                 doc.at("pi").get<std::vector<std::vector<double>>>(), emission);
    }
    fail(ErrorKind::data, "unknown model type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::data, std::string("invalid model description: ") + e.what());
  }
}

// ----------------------------------------------------------------- sampling

namespace {

constexpr std::uint64_t kRowLatent = 1;
constexpr std::uint64_t kColLatent = 2;
constexpr std::uint64_t kEntry = 3;
constexpr std::uint64_t kMcDraw = 4;
constexpr std::uint64_t kOracle = 5;

double draw_entry(const ModelSpec& model, double w, Substream& rng) {
  if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorKind::numeric, "graphon value is negative or not finite");
  if (model.emission == Emission::bernoulli) {
    if (w > 1.0 + 1e-12) fail(ErrorKind::numeric, "Bernoulli sampling hit a graphon value above 1");
    return rng.bernoulli(w) ? 1.0 : 0.0;
  }
  return static_cast<double>(rng.poisson(w));
}

// One p x q block with given latents; entries consume rng in row-major order.
void draw_block(const ModelSpec& model, std::span<const double> xs, std::span<const double> es, Substream& rng,
                std::vector<double>& out) {
  out.resize(xs.size() * es.size());
  std::size_t t = 0;
  for (const double x : xs)
    for (const double e : es) out[t++] = draw_entry(model, model.graphon(x, e), rng);
}

}  // namespace

SampleWithLatents sample(const ModelSpec& model, std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m < 1 || n < 1) fail(ErrorKind::usage, "sample size must be at least 1x1");
  std::vector<double> xi(m), eta(n);
  for (std::size_t i = 0; i < m; ++i) xi[i] = Substream(seed, {kRowLatent, i}).uniform();
  for (std::size_t j = 0; j < n; ++j) eta[j] = Substream(seed, {kColLatent, j}).uniform();
  RowMatrix values(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  parallel_for(m, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      Substream rng(seed, {kEntry, i, j});
      values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          draw_entry(model, model.graphon(xi[i], eta[j]), rng);
    }
  });
  return {BipartiteMatrix(std::move(values)), std::move(xi), std::move(eta)};
}

MonteCarloValue monte_carlo_expectation(const ModelSpec& model, const Kernel& h, std::size_t draws,
                                        std::uint64_t seed) {
  if (draws < 2) fail(ErrorKind::usage, "Monte Carlo needs at least two draws");
  constexpr std::size_t kChunks = 64;
  std::vector<double> sums(kChunks, 0.0), squares(kChunks, 0.0);
  parallel_for(kChunks, [&](std::size_t c) {
    std::vector<double> xs(h.p()), es(h.q()), block;
    double s = 0.0, s2 = 0.0;
    for (std::size_t t = c; t < draws; t += kChunks) {
      Substream rng(seed, {kMcDraw, t});
      for (auto& x : xs) x = rng.uniform();
      for (auto& e : es) e = rng.uniform();
      draw_block(model, xs, es, rng, block);
      const double v = h(block);
      s += v;
      s2 += v * v;
    }
    sums[c] = s;
    squares[c] = s2;
  });
  const double total = std::accumulate(sums.begin(), sums.end(), 0.0);
  const double total2 = std::accumulate(squares.begin(), squares.end(), 0.0);
  const double dn = static_cast<double>(draws);
  const double mean = total / dn;
  const double var = std::max(0.0, (total2 - dn * mean * mean) / (dn - 1.0));
  return {mean, std::sqrt(var / dn), false};
}

MonteCarloValue true_expectation(const ModelSpec& model, const Kernel& h, std::size_t mc_budget, std::uint64_t seed) {
  if (const auto v = model.truth(h.id())) return {*v, 0.0, true};
  return monte_carlo_expectation(model, h, mc_budget, seed);
}

MonteCarloValue oracle_conditional_variance(const ModelSpec& model, const Kernel& h, Axis axis,
                                            std::size_t n_outer, std::size_t n_inner, std::uint64_t seed) {
  if (n_outer < 2 || n_inner < 2) fail(ErrorKind::usage, "oracle needs n_outer >= 2 and n_inner >= 2");
  std::vector<double> inner_mean(n_outer), inner_var(n_outer);
  parallel_for(n_outer, [&](std::size_t o) {
    Substream outer(seed, {kOracle, o});
    const double fixed = outer.uniform();
    std::vector<double> xs(h.p()), es(h.q()), block;
    double s = 0.0, s2 = 0.0;
    for (std::size_t t = 0; t < n_inner; ++t) {
      Substream rng(seed, {kOracle, o, t + 1});
      for (auto& x : xs) x = rng.uniform();
      for (auto& e : es) e = rng.uniform();
      if (axis == Axis::row) xs[0] = fixed;
      else es[0] = fixed;
      draw_block(model, xs, es, rng, block);
      const double v = h(block);
      s += v;
      s2 += v * v;
    }
    const double dn = static_cast<double>(n_inner);
    inner_mean[o] = s / dn;
    inner_var[o] = std::max(0.0, (s2 - dn * inner_mean[o] * inner_mean[o]) / (dn - 1.0));
  });
  const double dn_out = static_cast<double>(n_outer);
  const double grand = std::accumulate(inner_mean.begin(), inner_mean.end(), 0.0) / dn_out;
  // Per-outer unbiased contributions; their mean is the estimate.
  std::vector<double> contrib(n_outer);
  for (std::size_t o = 0; o < n_outer; ++o) {
    const double dev = inner_mean[o] - grand;
    contrib[o] = dev * dev * dn_out / (dn_out - 1.0) - inner_var[o] / static_cast<double>(n_inner);
  }
  const double est = std::accumulate(contrib.begin(), contrib.end(), 0.0) / dn_out;
  double ss = 0.0;
  for (const double c : contrib) ss += (c - est) * (c - est);
  return {est, std::sqrt(ss / (dn_out - 1.0) / dn_out), false};
}

}  // namespace bipnet
