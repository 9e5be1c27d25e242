#include "bipnet/ustat.hpp"

#include <algorithm>
#include <cmath>

#include "bipnet/error.hpp"
#include "bipnet/parallel.hpp"

namespace bipnet {

namespace {

/// Neumaier compensated sum.
struct Compensated {
  double sum = 0.0;
  double carry = 0.0;
  void add(double x) noexcept {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) carry += (sum - t) + x;
    else carry += (x - t) + sum;
    sum = t;
  }
  double value() const noexcept { return sum + carry; }
};

struct BlockAccumulator {
  Compensated total;
  std::vector<Compensated> rows;
  std::vector<Compensated> cols;
};

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

Count term_count(std::size_t m, std::size_t n, std::size_t p, std::size_t q) {
  const Count a = binom_exact(m, p);
  const Count b = binom_exact(n, q);
  Count out = 0;
  if (__builtin_mul_overflow(a, b, &out)) fail(ErrorKind::numeric, "term count overflows 128 bits");
  return out;
}

UStatResult u_naive(const BipartiteMatrix& y, const Kernel& h, const UStatOptions& options) {
  const std::size_t m = y.rows();
  const std::size_t n = y.cols();
  const std::size_t p = h.p();
  const std::size_t q = h.q();
  if (!h.is_symmetric())
    fail(ErrorKind::usage, "kernel '" + h.id() + "' is not symmetric; pass it through symmetrize() first");
  if (p > options.max_p || q > options.max_q) {
    fail(ErrorKind::usage, "kernel '" + h.id() + "' is " + std::to_string(p) + "x" + std::to_string(q) +
                               "; the engine limit is " + std::to_string(options.max_p) + "x" +
                               std::to_string(options.max_q));
  }
  if (m < p || n < q) {
    fail(ErrorKind::data, "matrix " + std::to_string(m) + "x" + std::to_string(n) + " is too small for " +
                              std::to_string(p) + "x" + std::to_string(q) + " kernel '" + h.id() + "'");
  }
  const Count total = term_count(m, n, p, q);
  if (!options.force && to_double(total) > options.max_terms) {
    fail(ErrorKind::usage, "naive enumeration of kernel '" + h.id() + "' needs " + to_string(total) +
                               " kernel evaluations; rerun with force to proceed");
  }

  const Count row_sets = binom_exact(m, p);
  const std::size_t blocks = static_cast<std::size_t>(std::min<Count>(row_sets, 256));
  std::vector<BlockAccumulator> acc(blocks);
  parallel_for(blocks, [&](std::size_t b) {
    const Count begin = row_sets * b / blocks;
    const Count end = row_sets * (b + 1) / blocks;
    BlockAccumulator& a = acc[b];
    a.rows.assign(m, {});
    a.cols.assign(n, {});
    std::vector<double> gathered(p * n);
    std::vector<double> block(p * q);
    SubsetStream rs(m, p, begin);
    for (Count r = begin; r < end; ++r, rs.advance()) {
      const auto rows = rs.current();
      for (std::size_t a_ = 0; a_ < p; ++a_)
        for (std::size_t j = 0; j < n; ++j) gathered[a_ * n + j] = y(rows[a_], j);
      Compensated row_total;
      for (SubsetStream cs(n, q); !cs.done(); cs.advance()) {
        const auto cols = cs.current();
        for (std::size_t a_ = 0; a_ < p; ++a_)
          for (std::size_t b_ = 0; b_ < q; ++b_) block[a_ * q + b_] = gathered[a_ * n + cols[b_]];
        const double v = h(block);
        row_total.add(v);
        for (const std::size_t c : cols) a.cols[c].add(v);
      }
      const double rt = row_total.value();
      a.total.add(rt);
      for (const std::size_t i : rows) a.rows[i].add(rt);
    }
  });

  Compensated grand;
  std::vector<Compensated> rows(m), cols(n);
  for (const auto& a : acc) {
    grand.add(a.total.value());
    for (std::size_t i = 0; i < m; ++i) rows[i].add(a.rows[i].value());
    for (std::size_t j = 0; j < n; ++j) cols[j].add(a.cols[j].value());
  }
  UStatResult out;
  out.sum = grand.value();
  if (!std::isfinite(out.sum)) fail(ErrorKind::numeric, "kernel '" + h.id() + "' produced non-finite values");
  out.total_terms = total;
  out.value = out.sum / to_double(total);
  out.p = p;
  out.q = q;
  out.row_sums.resize(m);
  out.col_sums.resize(n);
  for (std::size_t i = 0; i < m; ++i) out.row_sums[i] = rows[i].value();
  for (std::size_t j = 0; j < n; ++j) out.col_sums[j] = cols[j].value();
  return out;
}

double u_leave_one_out(const UStatResult& base, Axis axis, std::size_t index) {
  const std::size_t m = base.rows();
  const std::size_t n = base.cols();
  if (axis == Axis::row) {
    if (index >= m) fail(ErrorKind::usage, "row index out of range");
    if (m - 1 < base.p) fail(ErrorKind::data, "cannot drop a row: fewer than p rows would remain");
    return (base.sum - base.row_sums[index]) / to_double(term_count(m - 1, n, base.p, base.q));
  }
  if (index >= n) fail(ErrorKind::usage, "column index out of range");
  if (n - 1 < base.q) fail(ErrorKind::data, "cannot drop a column: fewer than q columns would remain");
  return (base.sum - base.col_sums[index]) / to_double(term_count(m, n - 1, base.p, base.q));
}

bool has_fast_path(const Kernel& h) { return h.fast_path() != FastPath::none; }

namespace {

struct Sums {
  Eigen::VectorXd rows;
  Eigen::VectorXd cols;
  double total;
};

Sums sums_hD(const RowMatrix& Y) {
  return {Y.rowwise().sum(), Y.colwise().sum().transpose(), Y.sum()};
}

// Y_ij Y_ij' over j < j' (one row, two columns).
Sums sums_pair_in_row(const RowMatrix& Y) {
  const Eigen::VectorXd r = Y.rowwise().sum();
  const Eigen::VectorXd r2 = Y.array().square().rowwise().sum().matrix();
  const Eigen::VectorXd c2 = Y.array().square().colwise().sum().transpose().matrix();
  Eigen::VectorXd rows = 0.5 * (r.array().square() - r2.array()).matrix();
  Eigen::VectorXd cols = Y.transpose() * r - c2;
  const double total = rows.sum();
  return {std::move(rows), std::move(cols), total};
}

Sums transpose_sums(Sums s) {
  std::swap(s.rows, s.cols);
  return s;
}

Sums sums_h2(const RowMatrix& Y) {
  const Eigen::VectorXd r = Y.rowwise().sum();
  const Eigen::VectorXd c = Y.colwise().sum().transpose();
  const double S = Y.sum();
  const Eigen::VectorXd r2 = Y.array().square().rowwise().sum().matrix();
  const Eigen::VectorXd c2 = Y.array().square().colwise().sum().transpose().matrix();
  const Eigen::VectorXd Yc = Y * c;
  const Eigen::VectorXd Ytr = Y.transpose() * r;
  Eigen::VectorXd rows = 0.5 * (r.array() * (S - r.array()) - (Yc - r2).array()).matrix();
  Eigen::VectorXd cols = 0.5 * (c.array() * (S - c.array()) - (Ytr - c2).array()).matrix();
  const double total = 0.5 * rows.sum();
  return {std::move(rows), std::move(cols), total};
}

// Symmetrized Y11 (Y11 - 1) Y22.
Sums sums_hA1(const RowMatrix& Y) {
  const Eigen::ArrayXXd y = Y.array();
  const Eigen::ArrayXXd z = y * (y - 1.0);
  const Eigen::ArrayXd r = y.rowwise().sum();
  const Eigen::ArrayXd c = y.colwise().sum().transpose();
  const Eigen::ArrayXd zr = z.rowwise().sum();
  const Eigen::ArrayXd zc = z.colwise().sum().transpose();
  const double S = y.sum();
  const double Zs = z.sum();
  const Eigen::Index m = y.rows();
  const Eigen::Index n = y.cols();
  Eigen::ArrayXXd a(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      a(i, j) = z(i, j) * (S - r(i) - c(j) + y(i, j)) + y(i, j) * (Zs - zr(i) - zc(j) + z(i, j));
  Eigen::VectorXd rows = 0.25 * a.rowwise().sum().matrix();
  Eigen::VectorXd cols = 0.25 * a.colwise().sum().transpose().matrix();
  const double total = 0.5 * rows.sum();
  return {std::move(rows), std::move(cols), total};
}

// Symmetrized Y11 Y12 Y22.
Sums sums_hA2(const RowMatrix& Y) {
  const Eigen::ArrayXXd y = Y.array();
  const Eigen::ArrayXd r = y.rowwise().sum();
  const Eigen::ArrayXd c = y.colwise().sum().transpose();
  const Eigen::Index m = y.rows();
  const Eigen::Index n = y.cols();
  Eigen::ArrayXXd rest_row(m, n), rest_col(m, n);  // r_i - Y_ij, c_j - Y_ij
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      rest_row(i, j) = r(i) - y(i, j);
      rest_col(i, j) = c(j) - y(i, j);
    }
  const Eigen::ArrayXXd b = y * rest_row * rest_col;
  const Eigen::ArrayXd t = (y * rest_row).colwise().sum().transpose();  // T_j
  const Eigen::ArrayXd rr = (y * rest_col).rowwise().sum();             // R_i
  Eigen::ArrayXXd as_second_row(m, n), as_first_col(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      as_second_row(i, j) = y(i, j) * (t(j) - y(i, j) * rest_row(i, j));
      as_first_col(i, j) = y(i, j) * (rr(i) - y(i, j) * rest_col(i, j));
    }
  Eigen::VectorXd rows = 0.25 * (b.rowwise().sum() + as_second_row.rowwise().sum()).matrix();
  Eigen::VectorXd cols = 0.25 * (b.colwise().sum() + as_first_col.colwise().sum()).transpose().matrix();
  const double total = 0.25 * b.sum();
  return {std::move(rows), std::move(cols), total};
}

// 2x2 product of all four entries, row Gram form.
Sums sums_h6_rows(const RowMatrix& Y) {
  const RowMatrix y2 = Y.array().square().matrix();
  const Eigen::MatrixXd G = Y * Y.transpose();
  const Eigen::MatrixXd H = y2 * y2.transpose();
  const Eigen::MatrixXd pair = 0.5 * (G.array().square() - H.array()).matrix();
  Eigen::VectorXd rows = pair.rowwise().sum() - pair.diagonal();
  const Eigen::MatrixXd GY = G * Y;
  const Eigen::VectorXd quad = (Y.array() * GY.array()).colwise().sum().transpose().matrix();
  const Eigen::VectorXd diag_term = (y2.array().colwise() * G.diagonal().array()).colwise().sum().transpose().matrix();
  const Eigen::VectorXd c2 = y2.colwise().sum().transpose();
  const Eigen::VectorXd c4 = y2.array().square().colwise().sum().transpose().matrix();
  Eigen::VectorXd cols = 0.5 * (quad - diag_term - (c2.array().square().matrix() - c4));
  const double total = 0.5 * rows.sum();
  return {std::move(rows), std::move(cols), total};
}

Sums sums_h6(const RowMatrix& Y) {
  if (Y.rows() <= Y.cols()) return sums_h6_rows(Y);
  return transpose_sums(sums_h6_rows(Y.transpose()));
}

struct FastInfo {
  std::size_t p, q;
};

FastInfo fast_dims(FastPath path) {
  switch (path) {
    case FastPath::hD: return {1, 1};
    case FastPath::h1:
    case FastPath::hB: return {1, 2};
    case FastPath::hC: return {2, 1};
    default: return {2, 2};
  }
}

Sums fast_sums(const RowMatrix& Y, FastPath path) {
  switch (path) {
    case FastPath::hD: return sums_hD(Y);
    case FastPath::h1:
    case FastPath::hB: return sums_pair_in_row(Y);
    case FastPath::hC: return transpose_sums(sums_pair_in_row(Y.transpose()));
    case FastPath::h2: return sums_h2(Y);
    case FastPath::hA1: return sums_hA1(Y);
    case FastPath::hA2: return sums_hA2(Y);
    case FastPath::hA: {
      Sums a = sums_hA1(Y);
      const Sums b = sums_hA2(Y);
      a.rows -= 2.0 * b.rows;
      a.cols -= 2.0 * b.cols;
      a.total -= 2.0 * b.total;
      return a;
    }
    case FastPath::h6: return sums_h6(Y);
    case FastPath::none: break;
  }
  fail(ErrorKind::usage, "kernel has no fast path");
}

}  // namespace

UStatResult u_fast_sums(const BipartiteMatrix& y, FastPath path) {
  const auto [p, q] = fast_dims(path);
  if (y.rows() < p || y.cols() < q) {
    fail(ErrorKind::data, "matrix " + std::to_string(y.rows()) + "x" + std::to_string(y.cols()) +
                              " is too small for a " + std::to_string(p) + "x" + std::to_string(q) + " kernel");
  }
  const Sums s = fast_sums(y.values(), path);
  UStatResult out;
  out.p = p;
  out.q = q;
  out.total_terms = term_count(y.rows(), y.cols(), p, q);
  out.sum = s.total;
  if (!std::isfinite(out.sum)) fail(ErrorKind::numeric, "fast path produced non-finite values");
  out.value = s.total / to_double(out.total_terms);
  out.row_sums = to_std(s.rows);
  out.col_sums = to_std(s.cols);
  return out;
}

double u_fast(const BipartiteMatrix& y, const std::string& kernel_id) { return u_fast(y.values(), kernel_id); }

double u_fast(const RowMatrix& Y, const std::string& kernel_id) {
  const double m = static_cast<double>(Y.rows());
  const double n = static_cast<double>(Y.cols());
  if (kernel_id == "h1") {
    if (Y.cols() < 2) fail(ErrorKind::data, "h1 needs at least two columns");
    // Entry sum of Y^T Y equals the sum of squared row sums.
    const double gram_sum = Y.rowwise().sum().squaredNorm();
    const double gram_trace = Y.squaredNorm();
    return (gram_sum - gram_trace) / (m * n * (n - 1.0));
  }
  if (kernel_id == "h2") {
    if (Y.rows() < 2 || Y.cols() < 2) fail(ErrorKind::data, "h2 needs at least a 2x2 matrix");
    const double total = Y.sum();
    const double col_gram_sum = Y.rowwise().sum().squaredNorm();  // |Y^T Y|_1
    const double row_gram_sum = Y.colwise().sum().squaredNorm();  // |Y Y^T|_1
    const double trace = Y.squaredNorm();                         // Tr(Y^T Y) = Tr(Y Y^T) = |Y.^2|_1
    return (total * total - col_gram_sum + trace - row_gram_sum + trace - trace) /
           (m * (m - 1.0) * n * (n - 1.0));
  }
  if (kernel_id == "hD") return Y.mean();
  static const std::vector<std::pair<std::string, FastPath>> others{
      {"hB", FastPath::hB}, {"hC", FastPath::hC}, {"hA", FastPath::hA},
      {"hA1", FastPath::hA1}, {"hA2", FastPath::hA2}, {"h6", FastPath::h6}};
  for (const auto& [id, path] : others) {
    if (id != kernel_id) continue;
    const FastInfo info = fast_dims(path);
    if (static_cast<std::size_t>(Y.rows()) < info.p || static_cast<std::size_t>(Y.cols()) < info.q)
      fail(ErrorKind::data, "matrix too small for kernel '" + kernel_id + "'");
    return fast_sums(Y, path).total / to_double(term_count(static_cast<std::size_t>(Y.rows()),
                                                            static_cast<std::size_t>(Y.cols()), info.p, info.q));
  }
  fail(ErrorKind::usage, "no fast path for kernel '" + kernel_id + "'; use the naive enumeration instead");
}

UStatResult compute_ustat(const BipartiteMatrix& y, const Kernel& h, const UStatOptions& options) {
  if (options.allow_fast && has_fast_path(h)) return u_fast_sums(y, h.fast_path());
  return u_naive(y, h, options);
}

}  // namespace bipnet
