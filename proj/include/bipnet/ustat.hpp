#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bipnet/core.hpp"
#include "bipnet/kernels.hpp"

namespace bipnet {

/// U-statistic together with, for every row i (column j), the sum of kernel
/// values over the submatrices that contain it.
struct UStatResult {
  double value = 0.0;
  double sum = 0.0;  ///< sum of kernel values over all submatrices
  std::vector<double> row_sums;
  std::vector<double> col_sums;
  Count total_terms = 0;  ///< binom(m, p) * binom(n, q)
  std::size_t p = 0;
  std::size_t q = 0;

  std::size_t rows() const noexcept { return row_sums.size(); }
  std::size_t cols() const noexcept { return col_sums.size(); }
};

struct UStatOptions {
  bool force = false;            ///< bypass the term-count guard
  bool allow_fast = true;        ///< compute_ustat may use a closed-form path
  double max_terms = 1e10;
  std::size_t max_p = 4;
  std::size_t max_q = 4;
};

/// binom(m, p) * binom(n, q) for a kernel on an m x n matrix.
Count term_count(std::size_t m, std::size_t n, std::size_t p, std::size_t q);

/// Enumerates every unordered (row set, column set) pair. Deterministic for
/// any thread count: the row-subset stream is cut into a fixed number of
/// contiguous blocks merged in block order.
UStatResult u_naive(const BipartiteMatrix& y, const Kernel& h, const UStatOptions& options = {});

/// U-statistic with row `index` (axis row) or column `index` removed,
/// recovered from the contribution sums without re-enumeration.
double u_leave_one_out(const UStatResult& base, Axis axis, std::size_t index);

/// True when a closed-form whole-matrix path exists for the kernel.
bool has_fast_path(const Kernel& h);

/// Closed-form U-statistic for the kernels with a matrix-operation shortcut
/// (h1, h2, hB, hC, hD, hA, hA1, hA2, h6).
double u_fast(const BipartiteMatrix& y, const std::string& kernel_id);
/// Same on a raw matrix, skipping BipartiteMatrix validation.
double u_fast(const RowMatrix& y, const std::string& kernel_id);

/// Closed-form value and contribution sums, O(mn) except h6 (O(min(m,n)^2 max(m,n))).
UStatResult u_fast_sums(const BipartiteMatrix& y, FastPath path);

/// Fast path when available, naive enumeration otherwise.
UStatResult compute_ustat(const BipartiteMatrix& y, const Kernel& h, const UStatOptions& options = {});

}  // namespace bipnet
