#include "bipnet/varest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bipnet/error.hpp"
#include "bipnet/parallel.hpp"
#include "bipnet/rng.hpp"

namespace bipnet {

RhoPolicy RhoPolicy::fixed_at(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) fail(ErrorKind::usage, "rho must lie strictly between 0 and 1");
  return {false, rho};
}

double RhoPolicy::resolve(std::size_t m, std::size_t n) const {
  if (!empirical) return fixed;
  return static_cast<double>(m) / static_cast<double>(m + n);
}

std::string to_string(VarianceMethod method) {
  switch (method) {
    case VarianceMethod::direct: return "direct";
    case VarianceMethod::leave_one_out: return "leave_one_out";
    case VarianceMethod::algorithm_A: return "algorithm_A";
    case VarianceMethod::algorithm_B: return "algorithm_B";
    case VarianceMethod::algorithm_C: return "algorithm_C";
  }
  return "unknown";
}

ConditionalMeans conditional_means(const UStatResult& base) {
  const std::size_t m = base.rows();
  const std::size_t n = base.cols();
  const double row_norm = to_double(term_count(m - 1, n, base.p - 1, base.q));
  const double col_norm = to_double(term_count(m, n - 1, base.p, base.q - 1));
  ConditionalMeans out;
  out.mu.resize(m);
  out.nu.resize(n);
  for (std::size_t i = 0; i < m; ++i) out.mu[i] = base.row_sums[i] / row_norm;
  for (std::size_t j = 0; j < n; ++j) out.nu[j] = base.col_sums[j] / col_norm;
  return out;
}

namespace {

double sample_covariance(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / (n - 1.0);
}

double mean_square(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return s / static_cast<double>(v.size());
}

void finish(VarianceEstimate& est, std::size_t p, std::size_t q, double scale2) {
  est.V = static_cast<double>(p * p) / est.rho * est.v10 + static_cast<double>(q * q) / (1.0 - est.rho) * est.v01;
  est.scale = std::sqrt(scale2);
  est.degenerate = est.V <= kDegeneracyTolerance * scale2;
}

void check_sizes(std::size_t m, std::size_t n, std::size_t p, std::size_t q) {
  if (m <= p || n <= q) {
    fail(ErrorKind::data, "variance estimation needs more than " + std::to_string(p) + " rows and " +
                              std::to_string(q) + " columns, got " + std::to_string(m) + "x" + std::to_string(n));
  }
}

}  // namespace

VHats v_hats(std::span<const double> mu, std::span<const double> nu) {
  if (mu.size() < 2 || nu.size() < 2) fail(ErrorKind::data, "variance components need at least two rows and two columns");
  return {sample_covariance(mu, mu), sample_covariance(nu, nu)};
}

VarianceEstimate variance_from_ustat(const UStatResult& base, const RhoPolicy& rho, VarianceMethod method) {
  const std::size_t m = base.rows();
  const std::size_t n = base.cols();
  check_sizes(m, n, base.p, base.q);
  VarianceEstimate est;
  est.rho = rho.resolve(m, n);
  est.method = method;
  est.u = base.value;
  const ConditionalMeans cm = conditional_means(base);
  if (method == VarianceMethod::direct) {
    const VHats v = v_hats(cm.mu, cm.nu);
    est.v10 = v.v10;
    est.v01 = v.v01;
  } else if (method == VarianceMethod::leave_one_out) {
    const double p = static_cast<double>(base.p);
    const double q = static_cast<double>(base.q);
    const double dm = static_cast<double>(m);
    const double dn = static_cast<double>(n);
    double s10 = 0.0, s01 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double d = base.value - u_leave_one_out(base, Axis::row, i);
      s10 += d * d;
    }
    for (std::size_t j = 0; j < n; ++j) {
      const double d = base.value - u_leave_one_out(base, Axis::col, j);
      s01 += d * d;
    }
    est.v10 = (dm - p) * (dm - p) / (p * p * (dm - 1.0)) * s10;
    est.v01 = (dn - q) * (dn - q) / (q * q * (dn - 1.0)) * s01;
  } else {
    fail(ErrorKind::usage, "variance_from_ustat supports the direct and leave_one_out methods");
  }
  finish(est, base.p, base.q, 0.5 * (mean_square(cm.mu) + mean_square(cm.nu)));
  return est;
}

VarianceEstimate variance_estimate(const BipartiteMatrix& y, const Kernel& h, const RhoPolicy& rho,
                                   VarianceMethod method, const UStatOptions& options) {
  check_sizes(y.rows(), y.cols(), h.p(), h.q());
  if (method == VarianceMethod::algorithm_A) return algorithm_A_variance(y, h, rho);
  if (method == VarianceMethod::algorithm_B) return algorithm_B_variance(y, h, rho);
  if (method == VarianceMethod::algorithm_C) return algorithm_C_variance(y, h.id(), rho);
  return variance_from_ustat(compute_ustat(y, h, options), rho, method);
}

CovarianceEstimate covariance_from_ustats(std::span<const UStatResult> bases, std::vector<std::string> ids,
                                          const RhoPolicy& rho) {
  const std::size_t D = bases.size();
  if (D == 0) fail(ErrorKind::usage, "covariance estimation needs at least one kernel");
  const std::size_t m = bases[0].rows();
  const std::size_t n = bases[0].cols();
  std::vector<ConditionalMeans> cms;
  cms.reserve(D);
  for (const auto& b : bases) {
    check_sizes(b.rows(), b.cols(), b.p, b.q);
    cms.push_back(conditional_means(b));
  }
  CovarianceEstimate out;
  out.kernel_ids = std::move(ids);
  out.rho = rho.resolve(m, n);
  out.sigma = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(D));
  bool mixed = false;
  for (std::size_t k = 0; k < D; ++k) {
    out.values.push_back(bases[k].value);
    mixed = mixed || bases[k].p != bases[0].p || bases[k].q != bases[0].q;
    for (std::size_t l = k; l < D; ++l) {
      const double c10 = sample_covariance(cms[k].mu, cms[l].mu);
      const double c01 = sample_covariance(cms[k].nu, cms[l].nu);
      const double pp = static_cast<double>(bases[k].p * bases[l].p);
      const double qq = static_cast<double>(bases[k].q * bases[l].q);
      const double s = pp / out.rho * c10 + qq / (1.0 - out.rho) * c01;
      out.sigma(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = s;
      out.sigma(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = s;
    }
  }
  out.cross_size_rule = mixed ? "p_k*p_l and q_k*q_l weights (mixed kernel sizes)" : "common p, q";
  return out;
}

CovarianceEstimate covariance_estimate(const BipartiteMatrix& y, std::span<const Kernel> kernels, const RhoPolicy& rho,
                                       const UStatOptions& options) {
  std::vector<UStatResult> bases;
  std::vector<std::string> ids;
  for (const auto& h : kernels) {
    check_sizes(y.rows(), y.cols(), h.p(), h.q());
    bases.push_back(compute_ustat(y, h, options));
    ids.push_back(h.id());
  }
  return covariance_from_ustats(bases, std::move(ids), rho);
}

// ------------------------------------------------------------- Algorithm A

namespace {

/// Kernel value of every (row set, column set) pair, indexed by lexicographic rank.
struct KernelTable {
  std::vector<std::vector<std::size_t>> row_sets;
  std::vector<std::vector<std::size_t>> col_sets;
  std::vector<double> values;  // row-major [row set][col set]
  double at(std::size_t r, std::size_t c) const { return values[r * col_sets.size() + c]; }
};

KernelTable tabulate(const BipartiteMatrix& y, const Kernel& h) {
  KernelTable t;
  t.row_sets = enumerate_subsets(y.rows(), h.p());
  t.col_sets = enumerate_subsets(y.cols(), h.q());
  t.values.resize(t.row_sets.size() * t.col_sets.size());
  std::vector<double> block(h.p() * h.q());
  for (std::size_t r = 0; r < t.row_sets.size(); ++r)
    for (std::size_t c = 0; c < t.col_sets.size(); ++c) {
      extract_submatrix(y, t.row_sets[r], t.col_sets[c], block);
      t.values[r * t.col_sets.size() + c] = h(block);
    }
  return t;
}

std::size_t overlap(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::size_t k = 0;
  for (const auto x : a) k += static_cast<std::size_t>(std::binary_search(b.begin(), b.end(), x));
  return k;
}

/// Pairs (s, t) of subsets with the given overlap, as index pairs.
std::vector<std::pair<std::size_t, std::size_t>> pairs_with_overlap(const std::vector<std::vector<std::size_t>>& sets,
                                                                    std::size_t shared) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t s = 0; s < sets.size(); ++s)
    for (std::size_t t = 0; t < sets.size(); ++t)
      if (overlap(sets[s], sets[t]) == shared) out.emplace_back(s, t);
  return out;
}

/// Mean of X[r1][c1] * X[r2][c2] over the product of row pairs and column pairs.
double mean_pair_product(const KernelTable& t, const std::vector<std::pair<std::size_t, std::size_t>>& row_pairs,
                         const std::vector<std::pair<std::size_t, std::size_t>>& col_pairs) {
  const std::size_t nc = t.col_sets.size();
  // W[r2][c1] = sum over column pairs (c1, c2) of X[r2][c2].
  std::vector<std::vector<std::size_t>> partners(nc);
  for (const auto& [c1, c2] : col_pairs) partners[c1].push_back(c2);
  std::vector<double> w(t.row_sets.size() * nc, 0.0);
  for (std::size_t r = 0; r < t.row_sets.size(); ++r)
    for (std::size_t c1 = 0; c1 < nc; ++c1) {
      double s = 0.0;
      for (const auto c2 : partners[c1]) s += t.at(r, c2);
      w[r * nc + c1] = s;
    }
  double total = 0.0;
  for (const auto& [r1, r2] : row_pairs)
    for (std::size_t c1 = 0; c1 < nc; ++c1) total += t.at(r1, c1) * w[r2 * nc + c1];
  return total / (static_cast<double>(row_pairs.size()) * static_cast<double>(col_pairs.size()));
}

/// Draws k distinct indices from pool (partial Fisher-Yates); pool is reordered.
void draw_distinct(std::vector<std::size_t>& pool, std::size_t k, Substream& rng, std::vector<std::size_t>& out) {
  out.clear();
  for (std::size_t t = 0; t < k; ++t) {
    const std::size_t pick = t + static_cast<std::size_t>(rng.below(pool.size() - t));
    std::swap(pool[t], pool[pick]);
    out.push_back(pool[t]);
  }
}

struct RandomPairs {
  double share_row = 0.0;  // mean product, one shared row, no shared column
  double share_col = 0.0;
  double disjoint = 0.0;
};

RandomPairs random_pair_means(const BipartiteMatrix& y, const Kernel& h, const AlgorithmAOptions& options) {
  const std::size_t m = y.rows(), n = y.cols(), p = h.p(), q = h.q();
  std::vector<std::size_t> rows(m), cols(n), ra, ca;
  std::vector<double> block_a(p * q), block_b(p * q);
  double sums[3] = {0.0, 0.0, 0.0};
  std::iota(rows.begin(), rows.end(), 0);
  std::iota(cols.begin(), cols.end(), 0);
  for (std::size_t t = 0; t < options.pair_budget; ++t) {
    for (int kind = 0; kind < 3; ++kind) {
      Substream rng(options.seed, {0xA1A1, t, static_cast<std::uint64_t>(kind)});
      // First p (q) draws form block a, the next ones feed block b.
      draw_distinct(rows, 2 * p, rng, ra);
      draw_distinct(cols, 2 * q, rng, ca);
      std::vector<std::size_t> a_rows(ra.begin(), ra.begin() + static_cast<long>(p));
      std::vector<std::size_t> a_cols(ca.begin(), ca.begin() + static_cast<long>(q));
      std::vector<std::size_t> b_rows, b_cols;
      if (kind == 0) {  // one shared row
        b_rows.push_back(a_rows[0]);
        b_rows.insert(b_rows.end(), ra.begin() + static_cast<long>(p), ra.begin() + static_cast<long>(2 * p - 1));
        b_cols.assign(ca.begin() + static_cast<long>(q), ca.begin() + static_cast<long>(2 * q));
      } else if (kind == 1) {  // one shared column
        b_rows.assign(ra.begin() + static_cast<long>(p), ra.begin() + static_cast<long>(2 * p));
        b_cols.push_back(a_cols[0]);
        b_cols.insert(b_cols.end(), ca.begin() + static_cast<long>(q), ca.begin() + static_cast<long>(2 * q - 1));
      } else {
        b_rows.assign(ra.begin() + static_cast<long>(p), ra.begin() + static_cast<long>(2 * p));
        b_cols.assign(ca.begin() + static_cast<long>(q), ca.begin() + static_cast<long>(2 * q));
      }
      extract_submatrix(y, a_rows, a_cols, block_a);
      extract_submatrix(y, b_rows, b_cols, block_b);
      sums[kind] += h(block_a) * h(block_b);
    }
  }
  const double budget = static_cast<double>(options.pair_budget);
  return {sums[0] / budget, sums[1] / budget, sums[2] / budget};
}

}  // namespace

VarianceEstimate algorithm_A_variance(const BipartiteMatrix& y, const Kernel& h, const RhoPolicy& rho,
                                      const AlgorithmAOptions& options) {
  const std::size_t m = y.rows(), n = y.cols(), p = h.p(), q = h.q();
  if (!h.is_symmetric()) fail(ErrorKind::usage, "kernel '" + h.id() + "' must be symmetric");
  if (m < 2 * p || n < 2 * q) {
    fail(ErrorKind::data, "empirical covariance estimation needs at least " + std::to_string(2 * p) + " rows and " +
                              std::to_string(2 * q) + " columns");
  }
  VarianceEstimate est;
  est.method = VarianceMethod::algorithm_A;
  est.rho = rho.resolve(m, n);
  double scale2 = 0.0;
  if (m + n <= options.exhaustive_max_n) {
    const KernelTable t = tabulate(y, h);
    const auto rows_one = pairs_with_overlap(t.row_sets, 1);
    const auto rows_none = pairs_with_overlap(t.row_sets, 0);
    const auto cols_one = pairs_with_overlap(t.col_sets, 1);
    const auto cols_none = pairs_with_overlap(t.col_sets, 0);
    const double disjoint = mean_pair_product(t, rows_none, cols_none);
    est.v10 = mean_pair_product(t, rows_one, cols_none) - disjoint;
    est.v01 = mean_pair_product(t, rows_none, cols_one) - disjoint;
    est.u = std::accumulate(t.values.begin(), t.values.end(), 0.0) / static_cast<double>(t.values.size());
    for (const double v : t.values) scale2 += v * v;
    scale2 /= static_cast<double>(t.values.size());
  } else {
    const RandomPairs r = random_pair_means(y, h, options);
    est.v10 = r.share_row - r.disjoint;
    est.v01 = r.share_col - r.disjoint;
    est.u = compute_ustat(y, h, UStatOptions{.force = true}).value;
    scale2 = est.u * est.u;
  }
  est.V = static_cast<double>(p * p) / est.rho * est.v10 + static_cast<double>(q * q) / (1.0 - est.rho) * est.v01;
  est.scale = std::sqrt(scale2);
  est.degenerate = std::fabs(est.V) <= kDegeneracyTolerance * scale2;
  return est;
}

// ------------------------------------------------------------- Algorithm B

namespace {

// Mean kernel value over the blocks whose rows include `fixed`.
double anchored_mean(const BipartiteMatrix& y, const Kernel& h, std::size_t fixed) {
  const std::size_t m = y.rows(), n = y.cols(), p = h.p(), q = h.q();
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < m; ++i)
    if (i != fixed) others.push_back(i);
  const auto col_sets = enumerate_subsets(n, q);
  std::vector<double> block(p * q);
  std::vector<std::size_t> rows(p);
  double sum = 0.0;
  std::size_t count = 0;
  const auto picks = p == 1 ? std::vector<std::vector<std::size_t>>{{}} : enumerate_subsets(m - 1, p - 1);
  for (const auto& pick : picks) {
    rows.clear();
    rows.push_back(fixed);
    for (const auto k : pick) rows.push_back(others[k]);
    std::sort(rows.begin(), rows.end());
    for (const auto& cols : col_sets) {
      extract_submatrix(y, rows, cols, block);
      sum += h(block);
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace

VarianceEstimate algorithm_B_variance(const BipartiteMatrix& y, const Kernel& h, const RhoPolicy& rho) {
  const std::size_t m = y.rows(), n = y.cols();
  if (!h.is_symmetric()) fail(ErrorKind::usage, "kernel '" + h.id() + "' must be symmetric");
  check_sizes(m, n, h.p(), h.q());
  std::vector<double> mu(m), nu(n);
  parallel_for(m, [&](std::size_t i) { mu[i] = anchored_mean(y, h, i); });
  const BipartiteMatrix yt = y.transposed();
  const Kernel ht(h.q(), h.p(), h.id(), true, [&h, p = h.p(), q = h.q()](std::span<const double> b) {
    std::vector<double> back(p * q);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < q; ++j) back[i * q + j] = b[j * p + i];
    return h(back);
  });
  parallel_for(n, [&](std::size_t j) { nu[j] = anchored_mean(yt, ht, j); });
  const VHats v = v_hats(mu, nu);
  VarianceEstimate est;
  est.method = VarianceMethod::algorithm_B;
  est.rho = rho.resolve(m, n);
  est.v10 = v.v10;
  est.v01 = v.v01;
  est.u = std::accumulate(mu.begin(), mu.end(), 0.0) / static_cast<double>(m);
  finish(est, h.p(), h.q(), 0.5 * (mean_square(mu) + mean_square(nu)));
  return est;
}

// ------------------------------------------------------------- Algorithm C

VarianceEstimate algorithm_C_variance(const BipartiteMatrix& y, const std::string& kernel_id, const RhoPolicy& rho) {
  const Kernel h = builtin(kernel_id);
  const std::size_t m = y.rows(), n = y.cols(), p = h.p(), q = h.q();
  check_sizes(m, n, p, q);
  const RowMatrix& Y = y.values();
  const double u = u_fast(y, kernel_id);
  double s10 = 0.0, s01 = 0.0;
  RowMatrix reduced;
  for (std::size_t i = 0; i < m; ++i) {
    reduced.resize(static_cast<Eigen::Index>(m - 1), static_cast<Eigen::Index>(n));
    const auto ii = static_cast<Eigen::Index>(i);
    reduced.topRows(ii) = Y.topRows(ii);
    reduced.bottomRows(static_cast<Eigen::Index>(m - 1 - i)) = Y.bottomRows(static_cast<Eigen::Index>(m - 1 - i));
    const double d = u - u_fast(reduced, kernel_id);
    s10 += d * d;
  }
  for (std::size_t j = 0; j < n; ++j) {
    reduced.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n - 1));
    const auto jj = static_cast<Eigen::Index>(j);
    reduced.leftCols(jj) = Y.leftCols(jj);
    reduced.rightCols(static_cast<Eigen::Index>(n - 1 - j)) = Y.rightCols(static_cast<Eigen::Index>(n - 1 - j));
    const double d = u - u_fast(reduced, kernel_id);
    s01 += d * d;
  }
  const double dp = static_cast<double>(p), dq = static_cast<double>(q);
  const double dm = static_cast<double>(m), dn = static_cast<double>(n);
  VarianceEstimate est;
  est.method = VarianceMethod::algorithm_C;
  est.rho = rho.resolve(m, n);
  est.u = u;
  est.v10 = (dm - dp) * (dm - dp) / (dp * dp * (dm - 1.0)) * s10;
  est.v01 = (dn - dq) * (dn - dq) / (dq * dq * (dn - 1.0)) * s01;
  finish(est, p, q, u * u);
  return est;
}

}  // namespace bipnet
