#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "til/config.hpp"
#include "til/rng.hpp"
#include "til/twin.hpp"

namespace til {

enum class ScenarioKind {
  kUrban,              // accel/brake blocks with occasional gentle curves
  kSweptSteer,         // speed hold + steering chirp sweeping 0 -> 4 Hz
  kRoughRoad,          // speed hold, straight, stochastic road profile
  kLaneChangeBraking,  // double lane change followed by a hard stop
  kCircuit             // mixed accel / sweeps / braking / curves
};

// Throws std::invalid_argument for unknown names.
ScenarioKind scenario_kind_from_string(const std::string& name);
std::string to_string(ScenarioKind kind);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kUrban;
  double duration_s = 60.0;
  double fs = 100.0;          // sample rate, Hz
  double v_nominal = 14.0;    // m/s, initial speed and speed-hold target
  double road_sigma_z = 0.0;  // road-roughness intensity, m/sqrt(step)
  double road_corruption = 0.0;  // relative road-knowledge error fed to the twin
  double snr = 0.0;              // signal-to-noise power ratio; <= 0 -> clean
  ParamDeviation truth_dev;      // real-vehicle deviation from the data sheet
  double drag_scale = 1.0;              // plant-only model mismatch
  double tire_stiffness_scale = 1.0;    // plant-only model mismatch
  uint64_t seed = 1;
};

// Reads "scenario.*" keys; unspecified values keep per-kind defaults
// (rough-road and circuit kinds default to a non-zero road_sigma_z).
ScenarioSpec scenario_spec_from_config(const ConfigMap& cfg);

// One simulated drive of the real vehicle. meas carries the sensor noise
// requested by the spec; clean_meas is the noise-free counterpart. The twin
// must be driven with twin_inputs (its road knowledge may be corrupted);
// plant_inputs hold the true road.
struct TruthRun {
  double dt = 0.01;
  TwinState x0;
  ParamDeviation truth_dev;
  std::vector<DriverInput> plant_inputs;
  std::vector<DriverInput> twin_inputs;
  std::vector<MeasurementVec> meas;
  std::vector<MeasurementVec> clean_meas;
  std::vector<TwinState> states;
  int samples() const { return static_cast<int>(meas.size()); }
  // Sideslip angle of the true vehicle at sample k.
  double beta(int k) const;
};

// Integrated-noise road height: z[k+1] = z[k] + dt * N(0, sigma_z^2), z[0] = 0,
// so Var(z at time t) = sigma_z^2 * t * dt.
std::vector<double> make_road_profile(int n, double dt, double sigma_z, Rng& rng);

// The twin's imperfect knowledge of the road: each sample scaled by an
// independent U(1 - eps, 1 + eps) factor.
std::vector<double> corrupt_road(const std::vector<double>& z, double eps,
                                 Rng& rng);

// Adds zero-mean Gaussian noise to the longitudinal-acceleration and the
// three body-rate channels, sized per channel so signal power / noise power
// equals snr. Channels whose signal is identically zero stay untouched, as
// does everything else (lateral/vertical acceleration, wheel speeds).
// Returns the noise sigmas used, in channel order {ax, wx, wy, wz}.
std::array<double, 4> add_measurement_noise(std::vector<MeasurementVec>& meas,
                                            double snr, Rng& rng);

// Rolls the real vehicle (base parameters + truth deviation + mismatch
// scales) through the scenario and records everything the estimators need.
TruthRun build_truth_run(const VehicleParams& base, const TwinConfig& nominal,
                         const ScenarioSpec& spec);

}  // namespace til
