#include <cmath>

#include "doctest.h"
#include "formulab/errors.hpp"
#include "formulab/plant.hpp"
#include "formulab/rng.hpp"
#include "formulab/units.hpp"

using namespace formulab;

namespace {

PlantParams reference_params(int substeps) {
  PlantParams p;
  p.substeps = substeps;
  return p;
}

}  // namespace

TEST_CASE("derivative at rest equilibrium is zero") {
  const PlantParams p;
  const auto d = plant_derivative(PlantState{0.0, 0.0, 0}, 0.0, p);
  CHECK(d.pitch_rate == 0.0);
  CHECK(d.accel == 0.0);
}

TEST_CASE("derivative under full voltage from rest") {
  const PlantParams p;  // J=0.02, Kv=0.003, D=0.05, Ks=0.04
  const auto d = plant_derivative(PlantState{0.0, 0.0, 0}, 24.0, p);
  CHECK(d.pitch_rate == 0.0);
  // (Kv*24 - 0) / J = 0.072 / 0.02
  CHECK(d.accel == doctest::Approx(3.6).epsilon(1e-12));
}

TEST_CASE("derivative restoring torque at horizontal") {
  const PlantParams p;
  const auto d = plant_derivative(PlantState{kPi / 2.0, 0.0, 0}, 0.0, p);
  CHECK(d.pitch_rate == 0.0);
  // -Ks*sin(pi/2)/J = -0.04 / 0.02
  CHECK(d.accel == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("derivative rejects out-of-range voltage") {
  const PlantParams p;
  CHECK_THROWS_AS(plant_derivative(PlantState{}, 24.5, p), ContractViolation);
  CHECK_THROWS_AS(plant_derivative(PlantState{}, -25.0, p), ContractViolation);
}

TEST_CASE("derivative rejects non-finite state") {
  const PlantParams p;
  CHECK_THROWS_AS(plant_derivative(PlantState{std::nan(""), 0.0, 0}, 0.0, p),
                  NonFiniteState);
  CHECK_THROWS_AS(
      plant_derivative(PlantState{0.0, INFINITY, 0}, 0.0, p), NonFiniteState);
}

TEST_CASE("step keeps the rest equilibrium exactly") {
  const PlantParams p;
  PlantState s;
  s = plant_step(s, 0.0, p);
  CHECK(s.pitch == 0.0);
  CHECK(s.velocity == 0.0);
  CHECK(s.steps == 1);
}

TEST_CASE("step restoring torque pulls a tilted beam back") {
  const PlantParams p;
  const PlantState s = plant_step(PlantState{0.1, 0.0, 0}, 0.0, p);
  CHECK(s.pitch < 0.1);
}

TEST_CASE("full voltage settles on the torque-balance pitch") {
  // Parameters with an equilibrium below 90 deg; damping strong enough to
  // settle within the 10 s window but not so strong the approach crawls.
  PlantParams p;
  p.damping = 0.3;
  p.restoring = 0.2;
  PlantState s;
  for (int i = 0; i < 100; ++i) s = plant_step(s, 24.0, p);
  const double theta_star = std::asin(p.voltage_gain * 24.0 / p.restoring);
  CHECK(std::abs(s.pitch - theta_star) / theta_star < 0.01);

  // cross-check against a 100x substep reference integration
  PlantParams ref = p;
  ref.substeps = p.substeps * 100;
  PlantState r;
  for (int i = 0; i < 100; ++i) r = plant_step(r, 24.0, ref);
  CHECK(s.pitch == doctest::Approx(r.pitch).epsilon(1e-9));
}

TEST_CASE("step is deterministic bit for bit") {
  const PlantParams p;
  const PlantState s0{0.3, -0.7, 5};
  const PlantState a = plant_step(s0, 11.25, p);
  const PlantState b = plant_step(s0, 11.25, p);
  CHECK(a == b);
}

TEST_CASE("RK4 order: halving the substep size cuts the error by >= 12") {
  Rng rng(41);
  int checked = 0;
  while (checked < 50) {
    PlantState s{rng.uniform(-kPi / 2, kPi / 2), rng.uniform(-2.0, 2.0), 0};
    const double voltage = rng.uniform(-24.0, 24.0);

    const PlantState fine = plant_step(s, voltage, reference_params(1000));
    const PlantState coarse = plant_step(s, voltage, reference_params(2));
    const PlantState halved = plant_step(s, voltage, reference_params(4));

    const double err_coarse = std::hypot(coarse.pitch - fine.pitch,
                                         coarse.velocity - fine.velocity);
    const double err_halved = std::hypot(halved.pitch - fine.pitch,
                                         halved.velocity - fine.velocity);
    REQUIRE(err_halved > 0.0);
    CHECK(err_coarse / err_halved >= 12.0);
    ++checked;
  }
}

TEST_CASE("zero-input stability over 10000 steps") {
  const PlantParams p;
  PlantState s;
  for (int i = 0; i < 10000; ++i) s = plant_step(s, 0.0, p);
  CHECK(std::abs(s.pitch) < 1e-12);
}

TEST_CASE("energy never increases under zero input") {
  const PlantParams p;  // D > 0
  PlantState s{1.2, 0.9, 0};
  double energy = mechanical_energy(s, p);
  for (int i = 0; i < 5000; ++i) {
    s = plant_step(s, 0.0, p);
    const double next = mechanical_energy(s, p);
    CHECK(next <= energy + 1e-9);
    energy = next;
  }
}

TEST_CASE("parameter validation") {
  PlantParams p;
  CHECK_NOTHROW(p.validate());
  p.inertia = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = PlantParams{};
  p.substeps = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = PlantParams{};
  // full voltage too weak to hold the 40 deg targets
  p.voltage_gain = 1e-5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}
