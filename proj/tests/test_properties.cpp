#include "doctest.h"

#include "test_support.hpp"

TEST_SUITE("properties") {
  TEST_CASE("structural properties") {
    for (const auto& [name, pass] : testing_support::property_suite()) {
      CAPTURE(name);
      CHECK(pass);
    }
  }
}
