#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ionpair/trap.hpp"

using namespace ionpair::trap;

TEST_CASE("two-ion spacing at the trap endpoints") {
  CHECK(two_ion_distance({860e3, 4e6, kCa40MassU}) == doctest::Approx(6.2e-6).epsilon(0.02));
  CHECK(two_ion_distance({1720e3, 4e6, kCa40MassU}) == doctest::Approx(3.9e-6).epsilon(0.02));
  const double ratio = two_ion_distance({2e6, 5e6, 40}) / two_ion_distance({1e6, 5e6, 40});
  CHECK(ratio == doctest::Approx(std::pow(2.0, -2.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("d^3 w^2 constant over a frequency sweep") {
  const double ref = std::pow(two_ion_distance({0.5e6, 5e6, 40}), 3) * 0.25e12;
  for (int k = 0; k < 10; ++k) {
    const double f = 0.5e6 + 0.2e6 * k;
    const double d = two_ion_distance({f, 5e6, 40});
    CHECK(d * d * d * f * f == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("gradient calibration") {
  // Independent oracle with CODATA constants, 40 u as in the hand evaluation.
  const double u = 1.66053906660e-27, e = 1.602176634e-19;
  const double w = 2 * M_PI * 1e6;
  CHECK(gradient_from_axial_freq({1e6, 4e6, 40.0}) == doctest::Approx(40 * u * w * w / e * 1e-6).epsilon(1e-9));
  CHECK(gradient_from_axial_freq({1e6, 4e6, 40.0}) == doctest::Approx(16.37).epsilon(5e-4));
  CHECK(gradient_from_axial_freq({890e3, 4e6, 40.0}) == doctest::Approx(12.97).epsilon(1e-3));
  CHECK(gradient_from_axial_freq({890e3, 4e6, 40.0}) * 2.977 == doctest::Approx(38.6).epsilon(2e-3));
  // 40Ca mass gives a value 0.1 % lower.
  CHECK(gradient_from_axial_freq({890e3, 4e6, kCa40MassU}) == doctest::Approx(12.953).epsilon(1e-4));
}

TEST_CASE("gradient increases quadratically") {
  double prev = 0.0;
  for (int k = 1; k <= 10; ++k) {
    const double g = gradient_from_axial_freq({k * 1e5, 5e6, 40});
    CHECK(g > prev);
    CHECK(g == doctest::Approx(k * k * gradient_from_axial_freq({1e5, 5e6, 40})).epsilon(1e-12));
    prev = g;
  }
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(validate({0.0, 4e6, 40}), std::invalid_argument);
  CHECK_THROWS_AS(validate({5e6, 4e6, 40}), std::invalid_argument);
  CHECK_THROWS_AS(validate({1e6, 4e6, 0.0}), std::invalid_argument);
  CHECK_NOTHROW(validate({1e6, 4e6, 40}));
}

TEST_CASE("tip voltage calibration endpoints") {
  CHECK(axial_freq_from_tip_voltage(500) == doctest::Approx(860e3));
  CHECK(axial_freq_from_tip_voltage(2000) == doctest::Approx(1720e3));
}
