#pragma once

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "til/config.hpp"
#include "til/csv.hpp"
#include "til/scenario.hpp"
#include "til/twin.hpp"

namespace til {

// Sparse correction gains. State gains act on the matched innovation channel
// every sample; parameter gains drive the sign-gated deviation updates. The
// parameter gains are negative in this formulation: a real vehicle that is
// heavier (higher inertia) than the twin responds *less* to the same forces,
// so the innovation carries the opposite sign of the parameter error.
struct GainSet {
  double k_w_w = 0.25;     // wheel-rate residual -> wheel-rate correction
  double k_ax_vx = 0.003;  // long.-acceleration residual -> vx correction
  double k_ay_vy = 0.002;  // lat.-acceleration residual -> vy correction
  double k_wy_wy = 0.5;    // pitch-rate residual -> pitch-rate correction
  double k_wz_wz = 0.5;    // yaw-rate residual -> yaw-rate correction
  double k_ax_dm = -0.8;      // kg per (m/s^2), mass law
  double k_dwx_djxx = -10.0;  // kg m^2 per (rad/s^2), roll-inertia law
  double k_dwy_djyy = -50.0;  // pitch-inertia law
  double k_dwz_djzz = -50.0;  // yaw-inertia law
  double yaw_gate = 3.0 * M_PI / 180.0;  // rad/s, straight-driving gate

  static constexpr int kCount = 9;
  double by_index(int i) const;
  double& by_index(int i);
  static const char* name(int i);

  // Finiteness + positive gate. Tuning-box membership is the tuner's job.
  void check() const;  // throws std::invalid_argument
};

// Per-gain tuning box, indexed like GainSet::by_index.
struct GainBounds {
  std::array<double, GainSet::kCount> lo{
      0.0, 0.0, 0.0, 0.2, 0.2, -1000.0, -200.0, -2000.0, -2000.0};
  std::array<double, GainSet::kCount> hi{
      1.5, 0.1, 0.1, 1.5, 1.5, 0.0, 0.0, 0.0, 0.0};
};

GainSet gains_from_config(const ConfigMap& cfg);          // "gains.*"
GainBounds gain_bounds_from_config(const ConfigMap& cfg);  // "gains.*_lo/_hi"
void gains_to_config(const GainSet& g, ConfigMap* cfg);

// Backward difference followed by a one-pole low-pass. compensate() removes
// an externally injected jump from the next difference so the output tracks
// the underlying dynamics rather than the correction kicks.
class RateDifferentiator {
public:
  RateDifferentiator(double dt, double cutoff_hz)
      : dt_(dt), alpha_(dt / (1.0 / (2.0 * M_PI * cutoff_hz) + dt)) {}

  double step(double w) {
    if (!primed_) {
      primed_ = true;
      prev_ = w;
      return 0.0;
    }
    const double d = (w - prev_) / dt_;
    prev_ = w;
    lp_ += alpha_ * (d - lp_);
    return lp_;
  }

  void compensate(double delta) { prev_ += delta; }

private:
  double dt_, alpha_;
  double prev_ = 0.0, lp_ = 0.0;
  bool primed_ = false;
};

// Sparse state-correction law: delta = gain * (y - y_twin) on the matched
// channels (ax -> vx, ay -> vy, wy -> wy, wz -> wz, each wheel -> itself).
std::array<double, kNumCorrectable> correct_states(const MeasurementVec& y,
                                                   const MeasurementVec& y_twin,
                                                   const GainSet& g);

// Sign-gated mass update: K * eps(ax, wz) * (ax - ax_twin), with eps = 0 when
// |wz| exceeds the gate, +1 when ax >= 0, -1 when ax < 0 (measured values).
double correct_mass(const MeasurementVec& y, const MeasurementVec& y_twin,
                    const GainSet& g);

// Inertia updates from filtered rate-derivative residuals:
// dJaa = K * (dw_meas - dw_twin) * sgn(dw_meas).
std::pair<double, double> correct_roll_yaw_inertia(double dwx_meas,
                                                   double dwx_twin,
                                                   double dwz_meas,
                                                   double dwz_twin,
                                                   const GainSet& g);
double correct_pitch_inertia(double dwy_meas, double dwy_twin,
                             const GainSet& g);

// Time-threshold stage plan: mass -> Jyy -> Jxx/Jzz. A zero-duration stage is
// skipped; the last stage with positive duration stays active to the end.
struct StageSchedule {
  double mass_s = 60.0;
  double jyy_s = 40.0;
  double jxxjzz_s = 30.0;
  // 0 = mass, 1 = Jyy, 2 = Jxx/Jzz, -1 = no stage configured.
  int stage_at(double t) const;
};

struct ObserverConfig {
  GainSet gains;
  StageSchedule schedule;
  double diff_cutoff_hz = 10.0;
  // Cornering-event selection threshold for the roll/yaw-inertia stage. This
  // is data selection, distinct from the mass law's straight-driving gate: a
  // low threshold keeps the high-|rate-derivative| phases of an oscillatory
  // maneuver, where the sign of the differentiated signal is trustworthy.
  double corner_gate = 1.0 * M_PI / 180.0;
  // Pitch-event selection threshold for the pitch-inertia stage, applied to
  // the twin's own filtered pitch-rate derivative (noise-free, so the gate
  // decision cannot be flipped by sensor noise). Idle stretches carry no
  // pitch information but still rectify noise through the sign factor, so
  // they are excluded. Units rad/s^2; 0 disables the gate.
  double pitch_gate = 0.075;
  // Physical clamps on the deviation estimates, applied every sample.
  double dm_min = -600.0, dm_max = 1600.0;
  double djxx_min = -500.0, djxx_max = 1500.0;
  double djyy_min = -2000.0, djyy_max = 4000.0;
  double djzz_min = -2000.0, djzz_max = 4000.0;
};

// Reads "gains.*", "stages.*" and "observer.*" keys.
ObserverConfig observer_config_from_config(const ConfigMap& cfg);

struct EstimationSample {
  double t = 0.0;
  int stage = -1;
  ParamDeviation dev;       // estimate after this sample's update
  double beta_twin = 0.0;   // atan(vy/vx) of the twin
  double beta_true = 0.0;
  double res_ax = 0.0, res_ay = 0.0, res_wy = 0.0, res_wz = 0.0;
  double res_dwx = 0.0, res_dwy = 0.0, res_dwz = 0.0;
};

struct EstimationResult {
  std::vector<EstimationSample> samples;
  ParamDeviation final_dev;
  bool diverged = false;
  int diverged_at = -1;
  std::string diverged_reason;
  // Convenience series for metrics.
  std::vector<double> dm_series() const;
  std::vector<double> djxx_series() const;
  std::vector<double> djyy_series() const;
  std::vector<double> djzz_series() const;
  std::vector<double> beta_twin_series() const;
  std::vector<double> beta_true_series() const;
};

// Closed-loop twin-in-the-loop estimation over a recorded drive. The twin is
// built from the data-sheet parameters and the nominal simulator settings,
// started at the drive's initial state with init_dev as the parameter guess.
// Per sample: a-priori twin step -> innovation (incl. rate differentiation)
// -> state corrections -> active-stage parameter corrections -> parameter
// push. Divergence (twin guards or rejected corrections) stops the loop and
// flags the result instead of throwing. When log is given, one row per
// sample is written.
EstimationResult run_estimation(const VehicleParams& base,
                                const TwinConfig& twin_cfg,
                                const TruthRun& run,
                                const ObserverConfig& ocfg,
                                const ParamDeviation& init_dev,
                                CsvWriter* log = nullptr);

// Column names for the per-sample estimation log, in row order.
std::vector<std::string> estimation_log_columns();

}  // namespace til
