#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "til/config.hpp"
#include "til/rigid_body.hpp"

namespace til {

// Driver-level inputs for one sample interval.
struct DriverInput {
  double steer = 0.0;         // steering wheel angle, rad
  double drive_torque = 0.0;  // total traction torque at the driven axle, N m
  double brake_torque = 0.0;  // total brake torque demand (>= 0), N m
  double road_z_front = 0.0;  // road height under the front axle, m
  double road_z_rear = 0.0;   // road height under the rear axle, m
};

// Measurement wire order: [ax ay az wx wy wz w_fl w_fr w_rl w_rr].
// ax/ay are gravity-free body accelerations of the CM; az is vertical
// specific force (reads +g at rest). Wheel speeds are spin rates in rad/s.
struct MeasurementVec {
  std::array<double, 10> v{};
  double ax() const { return v[0]; }
  double ay() const { return v[1]; }
  double az() const { return v[2]; }
  double wx() const { return v[3]; }
  double wy() const { return v[4]; }
  double wz() const { return v[5]; }
  double wheel(int i) const { return v[6 + i]; }
};

struct TwinState {
  double vx = 0.0, vy = 0.0, vz = 0.0;  // CM velocity, body frame, m/s
  double wx = 0.0, wy = 0.0, wz = 0.0;  // body rates, rad/s
  double roll = 0.0, pitch = 0.0;       // attitude, rad (pitch > 0 = nose down)
  double heave = 0.0;                   // CM vertical offset from static trim, m
  std::array<double, 4> wheel_w{};      // wheel spin FL FR RL RR, rad/s
  std::array<double, 4> susp{};         // corner deflection from trim (compression +), m
  double px = 0.0, py = 0.0, yaw = 0.0;  // planar pose, world frame
};

// Additive deviations applied on top of the base parameter set.
struct ParamDeviation {
  double dm = 0.0;    // kg
  double djxx = 0.0;  // kg m^2
  double djyy = 0.0;
  double djzz = 0.0;
};

struct TwinConfig {
  double max_internal_dt = 2.0e-4;  // integrator substep ceiling, s
  double spring_n_per_m = 32000.0;
  double damper_ns_per_m = 3500.0;
  double susp_travel_m = 0.16;
  double wheel_radius = 0.35;
  double wheel_inertia = 1.2;
  double tire_b = 12.0;
  double tire_c = 1.65;
  double tire_mu0 = 0.95;
  double tire_e = 0.97;
  double tire_load_sens = 0.1;
  double cda = 0.80;
  double air_density = 1.225;
  double rolling_coeff = 0.012;
  double steer_ratio = 15.5;
  double max_road_wheel_angle = 0.55;
  double brake_front_share = 0.6;
  double driveline_visc = 0.4;
  double v_slip_floor = 2.0;
  double gravity = 9.80665;
  // Plant-mismatch scale factors (used when this instance plays the real
  // vehicle rather than the twin).
  double drag_scale = 1.0;
  double tire_stiffness_scale = 1.0;
  // Divergence guards.
  double max_speed = 150.0;
  double max_wheel_rate = 400.0;
  double max_tilt = 1.0;
};

TwinConfig twin_config_from_config(const ConfigMap& cfg);

struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Channels the estimator is allowed to correct, in injection order.
enum class Correctable {
  kVx = 0,
  kVy,
  kPitchRate,
  kYawRate,
  kWheelFL,
  kWheelFR,
  kWheelRL,
  kWheelRR,
  kCount
};
constexpr int kNumCorrectable = static_cast<int>(Correctable::kCount);

// High-fidelity vehicle simulator used both as the plant ("real vehicle")
// and as the digital twin. Consumers interact only through step / readout /
// inject / parameter accessors; the dynamics are internal.
class TwinSim {
public:
  TwinSim(const VehicleParams& base, const TwinConfig& cfg);

  // Additive parameter deviation; throws std::invalid_argument if the
  // effective set becomes nonphysical. Static trim is re-derived.
  void set_param_deviation(const ParamDeviation& d);
  const ParamDeviation& param_deviation() const { return dev_; }
  const VehicleParams& params() const { return eff_; }
  const TwinConfig& config() const { return cfg_; }

  const TwinState& state() const { return st_; }
  void set_state(const TwinState& s);

  // Static equilibrium on a flat road at standstill (all fields zero by
  // construction of the trim preloads).
  TwinState equilibrium_state() const { return TwinState{}; }
  // Straight-line cruise initial state at speed v (wheels rolling).
  TwinState cruise_state(double v) const;

  // Advance one sample with fixed-step RK4 (substeps capped at
  // max_internal_dt). Throws DivergenceError when guards trip.
  void step(const DriverInput& u, double dt);

  // Measurement corresponding to the state/input of the most recent step
  // (at construction: the initial state with zero input).
  const MeasurementVec& readout() const { return meas_; }

  // Additive corrections to the correctable channels, in Correctable order.
  // Throws std::invalid_argument if the corrected state breaks invariants.
  void inject(const std::array<double, kNumCorrectable>& delta);

private:
  void refresh_trim();
  void refresh_measurement(const DriverInput& u);
  void check_state(const char* when) const;

  VehicleParams base_, eff_;
  ParamDeviation dev_;
  TwinConfig cfg_;
  TwinState st_;
  std::array<double, 4> trim_load_{};  // corner preloads at static trim, N
  double fz_ref_ = 0.0;                // tire load-sensitivity reference, N
  MeasurementVec meas_{};
};

}  // namespace til
