#pragma once

#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bipnet/core.hpp"
#include "bipnet/error.hpp"

namespace testing_support {

/// Poisson(1.5) counts, or Bernoulli(0.4) entries when binary.
bipnet::BipartiteMatrix random_matrix(std::mt19937_64& gen, std::size_t m, std::size_t n, bool binary = false);

/// Randomly permutes rows and columns of a p x q row-major block.
std::vector<double> permute_block(std::mt19937_64& gen, const std::vector<double>& block, std::size_t p,
                                  std::size_t q);

/// Mean of raw(Y[r_1..r_p; c_1..c_q]) over all ordered tuples of distinct
/// rows and distinct columns. Independent of the subset engine.
double ordered_tuple_mean(const bipnet::RowMatrix& y, std::size_t p, std::size_t q,
                          const std::function<double(const bipnet::RowMatrix&)>& raw);

/// Kind of the bipnet::Error thrown by f; throws std::logic_error when f succeeds.
template <class F>
bipnet::ErrorKind error_kind(F&& f) {
  try {
    f();
  } catch (const bipnet::Error& e) {
    return e.kind();
  }
  throw std::logic_error("expected a bipnet::Error");
}

/// Named checks of the structural properties (kernel symmetry, covariance
/// PSD, nonnegative variances, extension invariance, delta gradients,
/// two-sample antisymmetry, thread-count determinism).
std::vector<std::pair<std::string, bool>> property_suite();

}  // namespace testing_support
