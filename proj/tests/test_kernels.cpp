#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "bipnet/kernels.hpp"
#include "bipnet/ustat.hpp"
#include "test_support.hpp"

using namespace bipnet;
using testing_support::error_kind;

namespace {

double eval(const Kernel& h, std::initializer_list<double> v) {
  const std::vector<double> b(v);
  return h(b);
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("builtin values on hand-checked blocks") {
    CHECK(eval(builtin("hD"), {3}) == 3);
    CHECK(eval(builtin("h1"), {2, 3}) == 6);
    CHECK(eval(builtin("hC"), {2, 5}) == 10);
    // [[1,2],[3,4]]: (1*4 + 2*3) / 2
    CHECK(eval(builtin("h2"), {1, 2, 3, 4}) == doctest::Approx(5.0));
    CHECK(eval(builtin("h6"), {1, 1, 1, 1}) == 1);
    CHECK(eval(builtin("h6"), {1, 1, 1, 0}) == 0);
    // hA1 symmetrized over the four diagonal pairings: each Y(Y-1) times the opposite entry.
    // [[2,1],[1,3]]: (2*1*3 + 0*1 + 0*1 + 3*2*2) / 4 = (6 + 12) / 4
    CHECK(eval(builtin("hA1"), {2, 1, 1, 3}) == doctest::Approx(4.5));
  }

  TEST_CASE("motif 14 indicator") {
    const Kernel h = builtin("h14");
    // Path r0-c0, r0-c1, r1-c1, r1-c2 with r1-c0 and r0-c2 absent.
    CHECK(eval(h, {1, 1, 0, 0, 1, 1}) == doctest::Approx(1.0 / 6.0));
    CHECK(eval(h, {1, 1, 1, 1, 1, 1}) == 0.0);
    CHECK(eval(h, {0, 0, 0, 0, 0, 0}) == 0.0);
    // Same value as brute-force symmetrization of the raw indicator.
    const Kernel brute = symmetrize_always(builtin_raw("h14"));
    std::mt19937_64 gen(3);
    std::bernoulli_distribution b(0.6);
    for (int t = 0; t < 200; ++t) {
      std::vector<double> block(6);
      for (auto& x : block) x = b(gen);
      CHECK(h(block) == doctest::Approx(brute(block)).epsilon(1e-14));
    }
  }

  TEST_CASE("symmetrize averages over permutations") {
    const Kernel raw(1, 2, "first", false, [](std::span<const double> y) { return y[0]; });
    const Kernel s = symmetrize(raw);
    CHECK(s.is_symmetric());
    CHECK(eval(s, {1, 3}) == doctest::Approx(2.0));
    const Kernel big(4, 4, "big", false, [](std::span<const double> y) { return y[0]; });
    CHECK(symmetrize(big).is_symmetric());
    const Kernel huge(7, 7, "huge", false, [](std::span<const double> y) { return y[0]; });
    CHECK(error_kind([&] { symmetrize(huge); }) == ErrorKind::usage);
  }

  TEST_CASE("extension averages sub-blocks") {
    const Kernel e = extend(builtin("hD"), 2, 2);
    CHECK(e.p() == 2);
    CHECK(eval(e, {1, 2, 3, 6}) == doctest::Approx(3.0));
    CHECK(error_kind([] { extend(builtin("h2"), 1, 2); }) == ErrorKind::usage);
  }

  TEST_CASE("checked evaluation") {
    RowMatrix b(1, 1);
    b(0, 0) = 4;
    CHECK(evaluate(builtin("hD"), b) == 4);
    CHECK_THROWS_AS(evaluate(builtin("h1"), b), Error);
  }

  TEST_CASE("polynomial kernels from JSON use 1-based indices") {
    // Y[1,1] * Y[1,2]^2 on a 1x2 block.
    const auto doc = nlohmann::json::parse(R"({"p":1,"q":2,"terms":[{"coef":1,"factors":[[1,1,1],[1,2,2]]}]})");
    const Kernel h = kernel_from_json(doc, "cubic");
    CHECK(h.is_symmetric());
    // symmetrized: (a b^2 + b a^2) / 2
    CHECK(eval(h, {2, 3}) == doctest::Approx((2.0 * 9.0 + 3.0 * 4.0) / 2.0));
    const auto zero_based = nlohmann::json::parse(R"({"p":1,"q":2,"terms":[{"coef":1,"factors":[[0,1,1]]}]})");
    CHECK(error_kind([&] { kernel_from_json(zero_based); }) == ErrorKind::data);

    const auto path = std::filesystem::temp_directory_path() / "bipnet_kernel.json";
    std::ofstream(path) << doc.dump();
    CHECK(resolve_kernel(path.string()).p() == 1);
    std::filesystem::remove(path);
    CHECK(error_kind([] { resolve_kernel("nope"); }) != ErrorKind::numeric);
  }

  TEST_CASE("fast-path tags") {
    for (const char* id : {"h1", "h2", "hA", "hB", "hC", "hD", "h6"}) CHECK(has_fast_path(builtin(id)));
    CHECK_FALSE(has_fast_path(builtin("h14")));
    CHECK_FALSE(has_fast_path(extend(builtin("hD"), 2, 2)));
  }
}
