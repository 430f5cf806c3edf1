#include "formulab/plant.hpp"

#include <cmath>
#include <string>

#include "formulab/errors.hpp"
#include "formulab/units.hpp"

namespace formulab {

void PlantParams::validate() const {
  if (!(inertia > 0.0)) throw ConfigError("plant.inertia must be > 0");
  if (!(damping >= 0.0)) throw ConfigError("plant.damping must be >= 0");
  if (!(voltage_gain > 0.0)) throw ConfigError("plant.voltage_gain must be > 0");
  if (!(restoring >= 0.0)) throw ConfigError("plant.restoring must be >= 0");
  if (!(v_max > 0.0)) throw ConfigError("plant.v_max must be > 0");
  if (!(dt > 0.0)) throw ConfigError("plant.dt must be > 0");
  if (substeps < 1) throw ConfigError("plant.substeps must be >= 1");
  // Reachability: every target in [-40 deg, 40 deg] must be holdable.
  if (!(voltage_gain * v_max > restoring * std::sin(deg_to_rad(40.0)))) {
    throw ConfigError(
        "plant: Kv * Vmax must exceed Ks * sin(40 deg), otherwise the "
        "extreme targets cannot be held");
  }
}

namespace {

void require_finite(const PlantState& s, const char* where) {
  if (!std::isfinite(s.pitch) || !std::isfinite(s.velocity)) {
    throw NonFiniteState(std::string("non-finite plant state in ") + where);
  }
}

void require_voltage(double voltage, const PlantParams& p) {
  if (!std::isfinite(voltage) || std::abs(voltage) > p.v_max) {
    throw ContractViolation("voltage " + std::to_string(voltage) +
                            " outside [-" + std::to_string(p.v_max) + ", " +
                            std::to_string(p.v_max) + "]");
  }
}

}  // namespace

PlantDerivative plant_derivative(const PlantState& state, double voltage,
                                 const PlantParams& params) {
  require_finite(state, "plant_derivative");
  require_voltage(voltage, params);
  const double accel =
      (params.voltage_gain * voltage - params.damping * state.velocity -
       params.restoring * std::sin(state.pitch)) /
      params.inertia;
  return {state.velocity, accel};
}

PlantState plant_step(PlantState state, double voltage,
                      const PlantParams& params) {
  require_finite(state, "plant_step");
  require_voltage(voltage, params);

  const double h = params.dt / params.substeps;
  const double torque = params.voltage_gain * voltage;
  const auto accel = [&](double pitch, double vel) {
    return (torque - params.damping * vel - params.restoring * std::sin(pitch)) /
           params.inertia;
  };

  double th = state.pitch;
  double w = state.velocity;
  for (int i = 0; i < params.substeps; ++i) {
    const double k1p = w;
    const double k1v = accel(th, w);
    const double k2p = w + 0.5 * h * k1v;
    const double k2v = accel(th + 0.5 * h * k1p, w + 0.5 * h * k1v);
    const double k3p = w + 0.5 * h * k2v;
    const double k3v = accel(th + 0.5 * h * k2p, w + 0.5 * h * k2v);
    const double k4p = w + h * k3v;
    const double k4v = accel(th + h * k3p, w + h * k3v);
    th += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    w += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }

  state.pitch = th;
  state.velocity = w;
  state.steps += 1;
  require_finite(state, "plant_step result (integrator blow-up)");
  return state;
}

double mechanical_energy(const PlantState& state, const PlantParams& params) {
  return 0.5 * params.inertia * state.velocity * state.velocity +
         params.restoring * (1.0 - std::cos(state.pitch));
}

}  // namespace formulab
