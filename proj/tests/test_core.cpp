#include <filesystem>

#include "doctest.h"

#include "bipnet/core.hpp"
#include "test_support.hpp"

using namespace bipnet;
using testing_support::error_kind;

TEST_SUITE("core") {
  TEST_CASE("csv parsing with and without header") {
    const auto plain = parse_matrix("1,0,2\n0,1,1\n", MatrixFormat::csv);
    CHECK(plain.rows() == 2);
    CHECK(plain.cols() == 3);
    CHECK(plain(0, 2) == 2.0);
    CHECK_FALSE(plain.is_binary());

    const auto labeled = parse_matrix("a,b\n1,0\n0,1\n", MatrixFormat::csv);
    CHECK(labeled.rows() == 2);
    CHECK(labeled.col_labels() == std::vector<std::string>{"a", "b"});
    CHECK(labeled.is_binary());

    const auto tsv = parse_matrix("1\t2\n3\t4\n", MatrixFormat::tsv);
    CHECK(tsv(1, 0) == 3.0);
  }

  TEST_CASE("malformed input is a data error") {
    CHECK(error_kind([] { parse_matrix("1,2\n3\n", MatrixFormat::csv); }) == ErrorKind::data);
    CHECK(error_kind([] { parse_matrix("1,2\n3,x\n", MatrixFormat::csv); }) == ErrorKind::data);
    CHECK(error_kind([] { parse_matrix("", MatrixFormat::csv); }) == ErrorKind::data);
    CHECK(error_kind([] { load_matrix("/nonexistent/m.csv", MatrixFormat::csv); }) == ErrorKind::data);
    RowMatrix bad(1, 1);
    bad(0, 0) = std::nan("");
    CHECK(error_kind([&] { BipartiteMatrix{bad}; }) == ErrorKind::data);
  }

  TEST_CASE("save and load round trip is exact") {
    RowMatrix v(2, 2);
    v << 0.1, 1.0 / 3.0, 2.5e-17, 7.0;
    const BipartiteMatrix y(v);
    const auto path = std::filesystem::temp_directory_path() / "bipnet_roundtrip.tsv";
    save_matrix(y, path, format_from_path(path));
    const auto back = load_matrix(path, MatrixFormat::tsv);
    CHECK(back.values() == y.values());
    std::filesystem::remove(path);
  }

  TEST_CASE("binomial coefficients") {
    CHECK(binom_exact(5, 2) == 10);
    CHECK(binom_exact(10, 0) == 1);
    CHECK(binom_exact(3, 5) == 0);
    CHECK(to_string(binom_exact(100, 50)) == "100891344545564193334812497256");
    CHECK(error_kind([] { binom_exact(400, 200); }) == ErrorKind::numeric);
  }

  TEST_CASE("subset streams") {
    const auto all = enumerate_subsets(5, 3);
    REQUIRE(all.size() == 10);
    CHECK(all.front() == std::vector<std::size_t>{0, 1, 2});
    CHECK(all.back() == std::vector<std::size_t>{2, 3, 4});
    for (std::size_t r = 0; r < all.size(); ++r) CHECK(unrank_subset(5, 3, r) == all[r]);
    // A stream started mid-way continues the lexicographic order.
    SubsetStream s(5, 3, 4);
    std::size_t r = 4;
    for (; !s.done(); s.advance(), ++r) CHECK(std::vector<std::size_t>(s.current().begin(), s.current().end()) == all[r]);
    CHECK(r == 10);
  }

  TEST_CASE("submatrix extraction") {
    RowMatrix v(3, 3);
    v << 1, 2, 3, 4, 5, 6, 7, 8, 9;
    const BipartiteMatrix y(v);
    const std::vector<std::size_t> rows{0, 2}, cols{1, 2};
    const RowMatrix b = extract_submatrix(y, rows, cols);
    CHECK(b(0, 0) == 2);
    CHECK(b(1, 1) == 9);
    const std::vector<std::size_t> out_of_range{3};
    CHECK_THROWS_AS(extract_submatrix(y, out_of_range, cols), Error);
    CHECK(y.transposed()(2, 0) == 3);
  }
}
