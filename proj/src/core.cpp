#include "bipnet/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "bipnet/error.hpp"

namespace bipnet {

std::string to_string(Count value) {
  if (value == 0) return "0";
  std::string digits;
  while (value > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

double to_double(Count value) { return static_cast<double>(value); }

BipartiteMatrix::BipartiteMatrix(RowMatrix values, std::vector<std::string> row_labels,
                                 std::vector<std::string> col_labels)
    : values_(std::move(values)), row_labels_(std::move(row_labels)), col_labels_(std::move(col_labels)) {
  if (values_.rows() < 1 || values_.cols() < 1) fail(ErrorKind::data, "matrix must have at least one row and one column");
  if (!values_.allFinite()) fail(ErrorKind::data, "matrix contains NaN or infinite entries");
  if (!row_labels_.empty() && row_labels_.size() != rows())
    fail(ErrorKind::data, "row label count does not match row count");
  if (!col_labels_.empty() && col_labels_.size() != cols())
    fail(ErrorKind::data, "column label count does not match column count");
  binary_ = (values_.array() == 0.0 || values_.array() == 1.0).all();
}

BipartiteMatrix BipartiteMatrix::transposed() const {
  return BipartiteMatrix(values_.transpose(), col_labels_, row_labels_);
}

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream stream(line);
  while (std::getline(stream, cell, sep)) cells.push_back(cell);
  if (!line.empty() && line.back() == sep) cells.emplace_back();
  return cells;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(const std::string& token) {
  const std::string t = trim(token);
  if (t.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return value;
}

}  // namespace

BipartiteMatrix parse_matrix(const std::string& text, MatrixFormat format) {
  const char sep = format == MatrixFormat::csv ? ',' : '\t';
  std::istringstream input(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::vector<std::vector<double>> grid;
  std::size_t width = 0;

  while (std::getline(input, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split_line(line, sep);

    if (grid.empty() && header.empty()) {
      const bool any_text = std::any_of(cells.begin(), cells.end(),
                                        [](const std::string& c) { return !parse_number(c).has_value(); });
      if (any_text) {
        for (const auto& c : cells) header.push_back(trim(c));
        width = cells.size();
        continue;
      }
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      fail(ErrorKind::data, "ragged row at line " + std::to_string(line_no) + ": expected " +
                                std::to_string(width) + " fields, found " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(width);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto value = parse_number(cells[c]);
      if (!value) {
        fail(ErrorKind::data, "non-numeric cell '" + trim(cells[c]) + "' at row " + std::to_string(line_no) +
                                  ", column " + std::to_string(c + 1));
      }
      row.push_back(*value);
    }
    grid.push_back(std::move(row));
  }
  if (grid.empty()) fail(ErrorKind::data, "matrix file holds no data rows");

  RowMatrix values(static_cast<Eigen::Index>(grid.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < grid.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = grid[i][j];
  return BipartiteMatrix(std::move(values), {}, std::move(header));
}

BipartiteMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::data, "cannot open matrix file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_matrix(buffer.str(), format);
}

MatrixFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".tsv" || ext == ".tab" || ext == ".txt") ? MatrixFormat::tsv : MatrixFormat::csv;
}

std::string format_matrix(const BipartiteMatrix& y, MatrixFormat format) {
  const char sep = format == MatrixFormat::csv ? ',' : '\t';
  std::string out;
  char buf[40];
  if (!y.col_labels().empty()) {
    for (std::size_t j = 0; j < y.cols(); ++j) {
      if (j) out.push_back(sep);
      out += y.col_labels()[j];
    }
    out.push_back('\n');
  }
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t j = 0; j < y.cols(); ++j) {
      if (j) out.push_back(sep);
      std::snprintf(buf, sizeof buf, "%.17g", y(i, j));
      out += buf;
    }
    out.push_back('\n');
  }
  return out;
}

void save_matrix(const BipartiteMatrix& y, const std::filesystem::path& path, MatrixFormat format) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::data, "cannot write matrix file " + path.string());
  out << format_matrix(y, format);
}

Count binom_exact(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  Count result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    // result * (n-k+i) is divisible by i; split the division to delay overflow.
    const Count g = std::gcd(result, static_cast<Count>(i));
    const Count factor = static_cast<Count>(n - k + i) / (static_cast<Count>(i) / g);
    Count next = 0;
    if (__builtin_mul_overflow(result / g, factor, &next)) {
      fail(ErrorKind::numeric, "binomial coefficient C(" + std::to_string(n) + "," + std::to_string(k) +
                                   ") overflows 128 bits");
    }
    result = next;
  }
  return result;
}

std::vector<std::size_t> unrank_subset(std::size_t dim, std::size_t k, Count rank) {
  std::vector<std::size_t> out;
  out.reserve(k);
  std::size_t x = 0;
  for (std::size_t a = 0; a < k; ++a) {
    for (;; ++x) {
      const Count block = binom_exact(dim - x - 1, k - a - 1);
      if (rank < block) break;
      rank -= block;
    }
    out.push_back(x++);
  }
  return out;
}

SubsetStream::SubsetStream(std::size_t dim, std::size_t k, Count offset)
    : dim_(dim), k_(k), total_(binom_exact(dim, k)) {
  if (k == 0 || offset >= total_) {
    done_ = true;
    return;
  }
  indices_ = unrank_subset(dim, k, offset);
}

void SubsetStream::advance() {
  if (done_) return;
  std::size_t pos = k_;
  while (pos > 0) {
    --pos;
    if (indices_[pos] < dim_ - k_ + pos) {
      ++indices_[pos];
      for (std::size_t t = pos + 1; t < k_; ++t) indices_[t] = indices_[t - 1] + 1;
      return;
    }
  }
  done_ = true;
}

std::vector<std::vector<std::size_t>> enumerate_subsets(std::size_t dim, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (k > dim) return out;
  for (SubsetStream s(dim, k); !s.done(); s.advance()) out.emplace_back(s.current().begin(), s.current().end());
  return out;
}

void extract_submatrix(const BipartiteMatrix& y, std::span<const std::size_t> rows,
                       std::span<const std::size_t> cols, std::span<double> out) {
  if (out.size() != rows.size() * cols.size()) fail(ErrorKind::usage, "submatrix buffer has the wrong size");
  std::size_t t = 0;
  for (const std::size_t r : rows) {
    if (r >= y.rows()) fail(ErrorKind::usage, "row index " + std::to_string(r + 1) + " out of bounds");
    for (const std::size_t c : cols) {
      if (c >= y.cols()) fail(ErrorKind::usage, "column index " + std::to_string(c + 1) + " out of bounds");
      out[t++] = y(r, c);
    }
  }
}

RowMatrix extract_submatrix(const BipartiteMatrix& y, std::span<const std::size_t> rows,
                            std::span<const std::size_t> cols) {
  RowMatrix block(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  extract_submatrix(y, rows, cols, std::span<double>(block.data(), static_cast<std::size_t>(block.size())));
  return block;
}

}  // namespace bipnet
