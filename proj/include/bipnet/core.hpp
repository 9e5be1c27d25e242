#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bipnet {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Exact unsigned count used for binomial coefficients and term totals.
using Count = unsigned __int128;

/// Node type of a bipartite matrix.
enum class Axis { row, col };

std::string to_string(Count value);
double to_double(Count value);

/// Dense m x n adjacency matrix of a bipartite network. Rows and columns
/// are the two node types. Immutable after construction.
class BipartiteMatrix {
 public:
  explicit BipartiteMatrix(RowMatrix values, std::vector<std::string> row_labels = {},
                           std::vector<std::string> col_labels = {});

  std::size_t rows() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  bool is_binary() const noexcept { return binary_; }
  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  const RowMatrix& values() const noexcept { return values_; }
  const std::vector<std::string>& row_labels() const noexcept { return row_labels_; }
  const std::vector<std::string>& col_labels() const noexcept { return col_labels_; }

  BipartiteMatrix transposed() const;

 private:
  RowMatrix values_;
  bool binary_ = false;
  std::vector<std::string> row_labels_;
  std::vector<std::string> col_labels_;
};

enum class MatrixFormat { csv, tsv };

/// Reads a numeric grid. A first row holding any non-numeric token is
/// taken as a header and becomes the column labels.
BipartiteMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
BipartiteMatrix parse_matrix(const std::string& text, MatrixFormat format);
void save_matrix(const BipartiteMatrix& y, const std::filesystem::path& path, MatrixFormat format);
std::string format_matrix(const BipartiteMatrix& y, MatrixFormat format);
MatrixFormat format_from_path(const std::filesystem::path& path);

/// Exact binomial coefficient; throws ErrorKind::numeric on 128-bit overflow.
Count binom_exact(std::uint64_t n, std::uint64_t k);

/// Lexicographic stream over the k-subsets of {0, ..., dim-1}.
///
/// Starting at an arbitrary rank is O(dim) through the combinatorial number
/// system, so a stream can be cut into contiguous blocks for workers.
class SubsetStream {
 public:
  SubsetStream(std::size_t dim, std::size_t k, Count offset = 0);

  /// Current subset, valid while !done().
  std::span<const std::size_t> current() const noexcept { return indices_; }
  bool done() const noexcept { return done_; }
  void advance();
  Count size() const noexcept { return total_; }

 private:
  std::size_t dim_;
  std::size_t k_;
  Count total_;
  bool done_ = false;
  std::vector<std::size_t> indices_;
};

/// Every k-subset in lexicographic order; empty when k > dim.
std::vector<std::vector<std::size_t>> enumerate_subsets(std::size_t dim, std::size_t k);

/// Subset of the given lexicographic rank.
std::vector<std::size_t> unrank_subset(std::size_t dim, std::size_t k, Count rank);

/// Copies Y[rows, cols] into a row-major p x q buffer.
void extract_submatrix(const BipartiteMatrix& y, std::span<const std::size_t> rows,
                       std::span<const std::size_t> cols, std::span<double> out);
RowMatrix extract_submatrix(const BipartiteMatrix& y, std::span<const std::size_t> rows,
                            std::span<const std::size_t> cols);

}  // namespace bipnet
