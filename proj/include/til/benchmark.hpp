#pragma once

// Comparison observer: discrete-time double-track planar vehicle model with
// magic-formula tires and an augmented mass-deviation state, corrected by the
// same sparse constant-gain law family as the twin-in-the-loop estimator.
// The model owns no wheel-spin dynamics: measured wheel rates enter the slip
// computation directly.

#include <array>
#include <string>
#include <vector>

#include "til/config.hpp"
#include "til/scenario.hpp"

namespace til {

// One axis of the simplified magic formula
//   F = Fz * D * sin(C * atan(B s - E (B s - atan(B s)))).
struct PacejkaCoeffs {
  double b = 10.0;
  double c = 1.9;
  double d = 0.95;
  double e = 0.97;
};

double pacejka(const PacejkaCoeffs& c, double slip, double fz);

struct BenchParams {
  double mass = 0.0;       // data-sheet curb mass, kg
  double jzz = 0.0;        // data-sheet yaw inertia, kg m^2
  double lf = 0.0;         // CM to front axle, m
  double lr = 0.0;         // CM to rear axle, m
  double track = 0.0;      // m
  double cm_height = 0.0;  // CM height over ground, m
  double wheel_radius = 0.35;
  double steer_ratio = 15.5;  // steering wheel to road wheel
  double gravity = 9.80665;
  double ts = 0.01;          // sampling time, s; run harness matches the drive
  double slip_floor = 0.5;   // m/s floor on the slip denominator
  PacejkaCoeffs tire_x, tire_y;
  void validate() const;  // throws std::invalid_argument
};

// Geometry from "vehicle.*" / "twin.*", tire set and sampling from "bench.*".
BenchParams bench_params_from_config(const ConfigMap& cfg);

// theta_bench: sparse correction gains plus the straight-driving gate of the
// sign-rectified mass law.
struct BenchGains {
  double k_ax_vx = 0.0;
  double k_wz_wz = 0.0;
  double k_ax_dm = 0.0;
  double k_ay_vy = 0.0;
  double yaw_gate = 3.0 * 3.14159265358979323846 / 180.0;  // rad/s
};

// Reads "bench_gains.*" (gains plus yaw_gate_deg).
BenchGains bench_gains_from_config(const ConfigMap& cfg);

struct BenchState {
  double vx = 0.0;  // m/s
  double vy = 0.0;  // m/s
  double wz = 0.0;  // rad/s
  double dm = 0.0;  // mass deviation estimate, kg
};

struct NormalLoads {
  std::array<double, 4> fz{};  // FL FR RL RR, N
  bool clamped = false;        // some wheel hit the zero-load floor
};

// Static axle split plus longitudinal transfer M ax h / wb and lateral
// transfer M ay h / t (half per axle). Sums to mass * g unless clamped.
NormalLoads estimate_normal_loads(double ax, double ay, double mass,
                                  const BenchParams& p);

struct BenchSlips {
  std::array<double, 4> lambda{};  // slip ratio
  std::array<double, 4> alpha{};   // slip angle, rad
};

// Wheel-frame slips from rigid-body kinematics; delta is the road-wheel
// angle. The slip-ratio denominator max(R w, v_wx) is floored at slip_floor.
BenchSlips bench_slips(const BenchState& s, double delta,
                       const std::array<double, 4>& wheel_w,
                       const BenchParams& p);

struct BenchInput {
  double steer = 0.0;              // steering-wheel angle, rad
  std::array<double, 4> wheel_w{};  // measured wheel rates, rad/s
  double ax_meas = 0.0;            // measured channels: corrections + loads
  double ay_meas = 0.0;
  double wz_meas = 0.0;
};

// One observer step: model outputs at the current state, explicit-Euler
// prediction, then the constant-gain corrections (including the gated
// sign-rectified mass update) from the output residuals.
BenchState bench_step(const BenchState& s, const BenchInput& u,
                      const BenchParams& p, const BenchGains& g);

struct BenchSample {
  double t = 0.0;
  BenchState state;  // after processing this sample's measurement
  double beta = 0.0;
  double res_ax = 0.0, res_ay = 0.0, res_wz = 0.0;
};

struct BenchResult {
  std::vector<BenchSample> samples;
  BenchState final_state;
  bool diverged = false;
  int diverged_at = -1;
  std::string diverged_reason;
  std::vector<double> dm_series() const;
  std::vector<double> beta_series() const;
};

// Runs the benchmark observer over a recorded drive, mirroring the
// twin-in-the-loop harness: initial planar state from the drive, mass
// deviation from init_dm, sampling time from the drive. Divergence is
// flagged, never thrown.
BenchResult run_benchmark_estimation(const BenchParams& p, const TruthRun& run,
                                     const BenchGains& g, double init_dm = 0.0);

}  // namespace til
