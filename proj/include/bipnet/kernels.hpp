#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "bipnet/core.hpp"

namespace bipnet {

/// Whole-matrix shortcut available for a kernel (closed-form sums over
/// every submatrix, see ustat.hpp).
enum class FastPath { none, hD, h1, hB, hC, h2, hA, hA1, hA2, h6 };

/// Evaluation rule over a row-major p x q block.
using KernelFn = std::function<double(std::span<const double>)>;

/// Real functional of a p x q submatrix.
///
/// A symmetric kernel is invariant under every row permutation and every
/// column permutation of its argument; the U-statistic engine only accepts
/// symmetric kernels.
class Kernel {
 public:
  Kernel(std::size_t p, std::size_t q, std::string id, bool symmetric, KernelFn eval,
         FastPath fast_path = FastPath::none);

  std::size_t p() const noexcept { return p_; }
  std::size_t q() const noexcept { return q_; }
  const std::string& id() const noexcept { return id_; }
  bool is_symmetric() const noexcept { return symmetric_; }
  FastPath fast_path() const noexcept { return fast_path_; }

  /// Unchecked evaluation on a p*q row-major buffer.
  double operator()(std::span<const double> block) const { return (*eval_)(block); }

 private:
  std::size_t p_;
  std::size_t q_;
  std::string id_;
  bool symmetric_;
  std::shared_ptr<const KernelFn> eval_;
  FastPath fast_path_;
};

/// Names accepted by builtin().
const std::vector<std::string>& builtin_names();

/// Library kernel, already symmetric: h6, h14, hA, hA1, hA2, hB, hC, hD, h1, h2.
Kernel builtin(std::string_view name);

/// Library kernel before symmetrization (h14 and the hA family differ from
/// builtin(); the others are already symmetric).
Kernel builtin_raw(std::string_view name);

/// Averages raw over all p!q! row/column permutation pairs. Returns raw
/// unchanged when it is already marked symmetric.
Kernel symmetrize(const Kernel& raw);

/// Same average, computed even when raw claims symmetry.
Kernel symmetrize_always(const Kernel& raw);

/// p2 x q2 kernel averaging h over every p x q sub-block of its argument.
Kernel extend(const Kernel& h, std::size_t p2, std::size_t q2);

/// Checked evaluation: dimension match and finite result.
double evaluate(const Kernel& h, const RowMatrix& block);

/// Polynomial kernel  sum_t coef_t * prod_f Y[i_f, j_f]^power_f  built from
/// {p, q, terms:[{coef, factors:[[i, j, power], ...]}]} with 1-based i, j,
/// then symmetrized.
Kernel kernel_from_json(const nlohmann::json& doc, std::string id = "user");

/// Builtin name or path to a JSON polynomial kernel document.
Kernel resolve_kernel(const std::string& selector);

}  // namespace bipnet
