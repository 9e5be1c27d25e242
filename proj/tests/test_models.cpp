#include <cmath>

#include "doctest.h"

#include "bipnet/models.hpp"
#include "test_support.hpp"

using namespace bipnet;
using testing_support::error_kind;

TEST_SUITE("models") {
  TEST_CASE("power-law marginals") {
    const Marginal f = Marginal::power_with_second_moment(3.0);
    CHECK(f.alpha() == doctest::Approx(2.0 + std::sqrt(6.0)).epsilon(1e-14));
    CHECK(f.integral() == doctest::Approx(1.0));
    CHECK(f.second_moment() == doctest::Approx(3.0).epsilon(1e-13));
    const Marginal g = Marginal::power_with_second_moment(2.0);
    CHECK(g.alpha() == doctest::Approx(1.0 + std::sqrt(2.0)).epsilon(1e-14));
    CHECK(Marginal::uniform()(0.3) == 1.0);
    CHECK(error_kind([] { Marginal::power_with_second_moment(0.5); }) == ErrorKind::data);
  }

  TEST_CASE("step marginals") {
    const Marginal s = Marginal::step({0.0, 0.5, 1.0}, {0.5, 1.5});
    CHECK(s(0.25) == 0.5);
    CHECK(s(0.75) == 1.5);
    CHECK(s.integral() == doctest::Approx(1.0));
    CHECK(s.second_moment() == doctest::Approx(0.5 * 0.25 + 0.5 * 2.25));
    CHECK(s.sup() == 1.5);
  }

  TEST_CASE("d closed form") {
    CHECK(d_true(0.0) == 0.0);
    CHECK(d_true(1.0) == doctest::Approx(0.1098001).epsilon(1e-6));
    CHECK(d_true(3.0) == doctest::Approx(0.3583692).epsilon(1e-6));
    // Model II(eps) through the generic block-model moments agrees with the closed form.
    for (double eps : {0.5, 1.0, 2.0, 3.0}) {
      ModelSpec generic = model_two(eps);
      const double lambda = 9.0 / 4.0, s = lambda / (lambda + eps);
      const ModelSpec raw = lbm({0.5, 0.5}, {0.5, 0.5},
                                {{s * (4 + 2 * eps), 2 * s}, {2 * s, s * (1 + 2 * eps)}}, Emission::poisson);
      CHECK(raw.truth("d").value() == doctest::Approx(d_true(eps)).epsilon(1e-12));
      CHECK(generic.truth("d").value() == doctest::Approx(d_true(eps)).epsilon(1e-12));
    }
  }

  TEST_CASE("model validation") {
    CHECK(error_kind([] { lbm({0.5, 0.6}, {1.0}, {{0.5}, {0.5}}, Emission::bernoulli); }) == ErrorKind::data);
    CHECK(error_kind([] { lbm({1.0}, {1.0}, {{1.5}}, Emission::bernoulli); }) == ErrorKind::data);
    CHECK(error_kind([] { model_two(-1.0); }) == ErrorKind::data);
    CHECK(error_kind([] { model_from_json({{"type", "paper"}, {"which", "IV"}}); }) == ErrorKind::data);
    const auto m3 = model_from_json({{"type", "paper"}, {"which", "III"}});
    CHECK(m3.truth("F2").value() == doctest::Approx(3.0));
    CHECK(m3.truth("G2").value() == doctest::Approx(2.0));
  }

  TEST_CASE("sampling is deterministic and seed-sensitive") {
    const ModelSpec m = model_three();
    const auto a = sample(m, 30, 20, 11);
    const auto b = sample(m, 30, 20, 11);
    const auto c = sample(m, 30, 20, 12);
    CHECK(a.matrix.values() == b.matrix.values());
    CHECK(a.xi == b.xi);
    CHECK(a.matrix.values() != c.matrix.values());
    CHECK(sample(model_one(), 10, 10, 1).matrix.is_binary());
  }

  TEST_CASE("analytic expectations agree with Monte Carlo") {
    const std::pair<ModelSpec, std::vector<const char*>> cases[] = {
        {model_one(), {"hD", "h1", "hC", "h2", "hA1", "hA2", "h6", "h14"}},
        {model_two(2.0), {"hD", "h1", "hC", "h2", "hA1", "hA2", "hA"}},
        {model_three(), {"hD", "h1", "hC", "h2", "hA1", "hA2"}},
    };
    std::uint64_t seed = 100;
    for (const auto& [model, ids] : cases)
      for (const char* id : ids) {
        CAPTURE(model.description);
        CAPTURE(id);
        const double truth = model.truth(id).value();
        const auto mc = monte_carlo_expectation(model, builtin(id), 200000, ++seed);
        CHECK(std::fabs(mc.value - truth) <= 4.5 * mc.std_error + 1e-12);
      }
  }

  TEST_CASE("true_expectation prefers analytic values") {
    const auto v = true_expectation(model_one(), builtin("h6"), 1000);
    CHECK(v.analytic);
    CHECK(v.std_error == 0.0);
    const Kernel custom(1, 1, "square", true, [](std::span<const double> y) { return y[0] * y[0]; });
    const auto mc = true_expectation(model_three(), custom, 100000);
    CHECK_FALSE(mc.analytic);
    // E[Y^2] = lambda + lambda^2 F2 G2 = 1 + 6 under Poisson.
    CHECK(std::fabs(mc.value - 7.0) <= 5.0 * mc.std_error);
  }

  TEST_CASE("conditional variance oracle") {
    // hD under Model III: Var(lambda f(xi)) = lambda^2 (F2 - 1) = 2, and G2 - 1 = 1 for columns.
    const auto row = oracle_conditional_variance(model_three(), builtin("hD"), Axis::row, 4000, 64, 5);
    const auto col = oracle_conditional_variance(model_three(), builtin("hD"), Axis::col, 4000, 64, 6);
    CHECK(std::fabs(row.value - 2.0) <= 4.0 * row.std_error);
    CHECK(std::fabs(col.value - 1.0) <= 4.0 * col.std_error);
  }
}
