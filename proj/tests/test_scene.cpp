#include <doctest.h>

#include <cmath>

#include "fmcw/scene.hpp"
#include "fmcw/errors.hpp"

using namespace fmcw;

TEST_CASE("reflection delay") {
  Reflector r{"corner", 2.55, 0.0, 0.0, 1.0};
  CHECK(reflection_delay(r, 0.0) == doctest::Approx(1.70117e-8).epsilon(1e-5));
  CHECK(reflection_delay(r, 123.0) == reflection_delay(r, 0.0));
  r.range_m = kSpeedOfLight / 2;
  CHECK(reflection_delay(r, 0.0) == doctest::Approx(1.0));
  Reflector mover{"m", 5.0, -1.0, 0.0, 1.0};
  CHECK(reflection_delay(mover, 1.0) == doctest::Approx(2.66851e-8).epsilon(1e-5));
  CHECK_THROWS_AS(reflection_delay(mover, 5.0), ScenarioError);
  CHECK_THROWS_AS(reflection_amplitude(mover, 6.0), ScenarioError);
}

TEST_CASE("reflection amplitude falls as 1/d^2") {
  Reflector r{"r", 1.0, 0.0, 0.0, 1.0};
  CHECK(reflection_amplitude(r, 0) == 1.0);
  r.range_m = 2.0;
  CHECK(reflection_amplitude(r, 0) == 0.25);
  r.range_m = 2.55;
  r.reflectivity = 3.0;
  CHECK(reflection_amplitude(r, 0) == doctest::Approx(0.46136).epsilon(1e-5));
}

TEST_CASE("attacker path geometry") {
  AttackerPlacement p;
  p.distance_m = 4.0;
  auto path = attacker_path(p, 0);
  CHECK(path.delay_s == doctest::Approx(1.33426e-8).epsilon(1e-5));
  CHECK(path.amplitude_scale == 0.25);
  CHECK(path.azimuth_rad == 0.0);

  p.distance_m = 1.0;
  CHECK(attacker_path(p, 0).amplitude_scale == 1.0);

  p.distance_m = 4.0;
  p.tx_offsets = {TxOffset{0.01, 0.0}};
  path = attacker_path(p, 0);
  CHECK(path.delay_s == doctest::Approx(3.99 / kSpeedOfLight).epsilon(1e-14));
  CHECK(path.distance_m == doctest::Approx(3.99));

  // lateral offsets move the arrival direction
  p.tx_offsets = {TxOffset{0.0, 0.4}, TxOffset{0.0, -0.4}};
  CHECK(attacker_path(p, 0).azimuth_rad == doctest::Approx(std::atan2(0.4, 4.0)));
  CHECK(attacker_path(p, 1).azimuth_rad == doctest::Approx(-std::atan2(0.4, 4.0)));
  CHECK(attacker_path(p, 0).distance_m == doctest::Approx(std::hypot(4.0, 0.4)));
  CHECK_THROWS_AS(attacker_path(p, 2), ConfigError);

  p.azimuth_rad = 0.3;
  p.tx_offsets = {TxOffset{}};
  CHECK(attacker_path(p, 0).azimuth_rad == doctest::Approx(0.3));
}

TEST_CASE("placement validation") {
  AttackerPlacement p;
  p.tx_offsets = {TxOffset{0.0, 0.5}};
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.tx_offsets.clear();
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p.tx_offsets = {TxOffset{}};
  p.distance_m = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("rx phase shift") {
  const double lambda = 3.8934e-3;
  for (std::size_t m = 0; m < 16; ++m) CHECK(rx_phase_shift(0.0, m, lambda / 2, lambda) == 0.0);
  CHECK(rx_phase_shift(kPi / 6, 1, lambda / 2, lambda) == doctest::Approx(kPi / 2));
  CHECK(rx_phase_shift(kPi / 6, 2, lambda / 2, lambda) == doctest::Approx(kPi));
}

TEST_CASE("reflector validation") {
  Reflector r{"r", -1.0, 0.0, 0.0, 1.0};
  CHECK_THROWS_AS(r.validate(), ScenarioError);
  r.range_m = 1.0;
  r.azimuth_rad = 2.0;
  CHECK_THROWS_AS(r.validate(), ScenarioError);
}
