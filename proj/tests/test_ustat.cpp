#include <cmath>

#include "doctest.h"

#include "bipnet/parallel.hpp"
#include "bipnet/ustat.hpp"
#include "test_support.hpp"

using namespace bipnet;
using testing_support::error_kind;
using testing_support::ordered_tuple_mean;
using testing_support::random_matrix;

namespace {

// Raw kernels written out independently of the library.
double raw_h1(const RowMatrix& b) { return b(0, 0) * b(0, 1); }
double raw_hC(const RowMatrix& b) { return b(0, 0) * b(1, 0); }
double raw_h2(const RowMatrix& b) { return b(0, 0) * b(1, 1); }
double raw_h6(const RowMatrix& b) { return b(0, 0) * b(0, 1) * b(1, 0) * b(1, 1); }
double raw_hA(const RowMatrix& b) { return b(0, 0) * (b(0, 0) - 1) * b(1, 1) - 2 * b(0, 0) * b(0, 1) * b(1, 1); }
double raw_h14(const RowMatrix& b) {
  return b(0, 0) * b(0, 1) * b(1, 1) * b(1, 2) * (1 - b(1, 0)) * (1 - b(0, 2));
}

}  // namespace

TEST_SUITE("ustat") {
  TEST_CASE("term counts") {
    CHECK(term_count(5, 6, 2, 3) == 10 * 20);
    CHECK(term_count(3, 3, 4, 1) == 0);
  }

  TEST_CASE("ones matrix") {
    const BipartiteMatrix y(RowMatrix::Ones(2, 2));
    CHECK(compute_ustat(y, builtin("hD")).value == 1.0);
    CHECK(u_naive(y, builtin("h2")).value == 1.0);
  }

  TEST_CASE("naive engine matches the ordered-tuple oracle") {
    std::mt19937_64 gen(17);
    const std::tuple<const char*, std::size_t, std::size_t, double (*)(const RowMatrix&)> cases[] = {
        {"h1", 1, 2, raw_h1}, {"hC", 2, 1, raw_hC}, {"h2", 2, 2, raw_h2},
        {"h6", 2, 2, raw_h6}, {"hA", 2, 2, raw_hA}, {"h14", 2, 3, raw_h14}};
    for (int t = 0; t < 4; ++t) {
      const auto y = random_matrix(gen, 4 + t, 5, t % 2 == 0);
      for (const auto& [id, p, q, raw] : cases) {
        CAPTURE(id);
        UStatOptions o;
        o.allow_fast = false;
        const double oracle = ordered_tuple_mean(y.values(), p, q, raw);
        CHECK(compute_ustat(y, builtin(id), o).value == doctest::Approx(oracle).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("contribution sums match the definition") {
    std::mt19937_64 gen(18);
    const auto y = random_matrix(gen, 6, 7);
    const Kernel h = builtin("h1");
    const auto u = u_naive(y, h);
    // Row 2 appears in every column pair of that row.
    double row2 = 0.0;
    for (int a = 0; a < 7; ++a)
      for (int b = a + 1; b < 7; ++b) row2 += y(2, a) * y(2, b);
    CHECK(u.row_sums[2] == doctest::Approx(row2));
    double total_rows = 0.0, total_cols = 0.0;
    for (double r : u.row_sums) total_rows += r;
    for (double c : u.col_sums) total_cols += c;
    CHECK(total_rows == doctest::Approx(1.0 * u.sum));
    CHECK(total_cols == doctest::Approx(2.0 * u.sum));
  }

  TEST_CASE("fast paths equal naive enumeration, including contribution sums") {
    std::mt19937_64 gen(19);
    for (int t = 0; t < 12; ++t) {
      const auto y = random_matrix(gen, 3 + t % 5, 2 + t % 7, t % 3 == 0);
      for (const char* id : {"hD", "h1", "hB", "hC", "h2", "hA", "hA1", "hA2", "h6"}) {
        const Kernel h = builtin(id);
        if (y.rows() < h.p() || y.cols() < h.q()) continue;
        CAPTURE(id);
        UStatOptions o;
        o.allow_fast = false;
        const auto naive = compute_ustat(y, h, o);
        const auto fast = u_fast_sums(y, h.fast_path());
        CHECK(fast.value == doctest::Approx(naive.value).epsilon(1e-12));
        CHECK(u_fast(y, id) == doctest::Approx(naive.value).epsilon(1e-12));
        for (std::size_t i = 0; i < y.rows(); ++i)
          CHECK(fast.row_sums[i] == doctest::Approx(naive.row_sums[i]).epsilon(1e-12));
        for (std::size_t j = 0; j < y.cols(); ++j)
          CHECK(fast.col_sums[j] == doctest::Approx(naive.col_sums[j]).epsilon(1e-12));
      }
    }
    CHECK(error_kind([] { u_fast(BipartiteMatrix(RowMatrix::Ones(3, 3)), "h14"); }) == ErrorKind::usage);
  }

  TEST_CASE("leave-one-out from contribution sums") {
    std::mt19937_64 gen(20);
    const auto y = random_matrix(gen, 6, 5);
    for (const char* id : {"h2", "h6", "hA"}) {
      const auto base = u_naive(y, builtin(id));
      for (std::size_t i = 0; i < y.rows(); ++i) {
        RowMatrix r(5, 5);
        for (Eigen::Index a = 0, k = 0; a < 6; ++a)
          if (static_cast<std::size_t>(a) != i) r.row(k++) = y.values().row(a);
        CHECK(u_leave_one_out(base, Axis::row, i) ==
              doctest::Approx(u_naive(BipartiteMatrix(r), builtin(id)).value).epsilon(1e-12));
      }
      RowMatrix c = y.values().leftCols(4);
      CHECK(u_leave_one_out(base, Axis::col, 4) ==
            doctest::Approx(u_naive(BipartiteMatrix(c), builtin(id)).value).epsilon(1e-12));
    }
  }

  TEST_CASE("guards") {
    const BipartiteMatrix small(RowMatrix::Ones(1, 3));
    CHECK(error_kind([&] { u_naive(small, builtin("h2")); }) == ErrorKind::data);
    const Kernel raw = builtin_raw("hA1");
    CHECK(error_kind([&] { u_naive(BipartiteMatrix(RowMatrix::Ones(3, 3)), raw); }) == ErrorKind::usage);
    UStatOptions tight;
    tight.max_terms = 10;
    CHECK(error_kind([&] { u_naive(BipartiteMatrix(RowMatrix::Ones(5, 5)), builtin("h2"), tight); }) ==
          ErrorKind::usage);
    tight.force = true;
    CHECK(u_naive(BipartiteMatrix(RowMatrix::Ones(5, 5)), builtin("h2"), tight).value == 1.0);
  }

  TEST_CASE("enumeration does not depend on the thread count") {
    std::mt19937_64 gen(21);
    const auto y = random_matrix(gen, 30, 12);
    const std::size_t saved = thread_count();
    set_thread_count(1);
    const auto a = u_naive(y, builtin("h6"));
    set_thread_count(8);
    const auto b = u_naive(y, builtin("h6"));
    set_thread_count(saved);
    CHECK(a.sum == b.sum);
    CHECK(a.row_sums == b.row_sums);
  }
}
