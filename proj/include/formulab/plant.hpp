#ifndef FORMULAB_PLANT_HPP_
#define FORMULAB_PLANT_HPP_

namespace formulab {

// Continuous-time surrogate of the 1-DoF pitch rig:
//
//   J * pitch'' = Kv * V - D * pitch' - Ks * sin(pitch)
//
// driven by a differential motor voltage held constant over each sample.
struct PlantParams {
  double inertia = 0.02;        // J  [kg m^2]
  double damping = 0.05;        // D  [N m s/rad]
  double voltage_gain = 0.003;  // Kv [N m / V]
  double restoring = 0.04;      // Ks [N m]
  double v_max = 24.0;          // [V]
  double dt = 0.1;              // sample time [s]
  int substeps = 10;            // RK4 substeps per sample

  // Throws ConfigError on invalid values. Besides positivity this checks
  // that full voltage can hold every target in [-40 deg, 40 deg]:
  // Kv * Vmax > Ks * sin(40 deg).
  void validate() const;

  bool operator==(const PlantParams&) const = default;
};

struct PlantState {
  double pitch = 0.0;     // theta [rad]
  double velocity = 0.0;  // theta-dot [rad/s]
  long steps = 0;         // samples elapsed since reset

  bool operator==(const PlantState&) const = default;
};

struct PlantDerivative {
  double pitch_rate;  // d theta / dt   [rad/s]
  double accel;       // d theta-dot / dt [rad/s^2]
};

// Right-hand side of the ODE. Pure. Throws ContractViolation if
// |voltage| > v_max, NonFiniteState if the state is not finite.
PlantDerivative plant_derivative(const PlantState& state, double voltage,
                                 const PlantParams& params);

// Advances one sample time with classical RK4 over `substeps` uniform
// substeps, voltage held constant (zero-order hold). Deterministic.
PlantState plant_step(PlantState state, double voltage,
                      const PlantParams& params);

// 1/2 J w^2 + Ks (1 - cos theta); monotone non-increasing under zero input.
double mechanical_energy(const PlantState& state, const PlantParams& params);

}  // namespace formulab

#endif  // FORMULAB_PLANT_HPP_
