#include "til/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace til {
namespace {

constexpr double kTau = 6.283185307179586476925286766559;

// Drive torque that roughly balances drag + rolling resistance at speed v.
double feedforward_torque(const TwinConfig& c, double mass, double v) {
  const double drag = 0.5 * c.air_density * c.cda * v * v;
  const double roll = c.rolling_coeff * mass * c.gravity;
  return (drag + roll) * c.wheel_radius;
}

// Base class for the per-kind driver models. eval() fills steer and torques;
// the rollout loop supplies road heights afterwards.
struct DriverModel {
  virtual ~DriverModel() = default;
  virtual DriverInput eval(double t, const TwinState& s) = 0;
};

// Proportional speed hold with feedforward; brakes when well above target.
struct SpeedHold {
  const TwinConfig* cfg;
  double mass;
  double kp = 1100.0;
  double t_max = 2800.0;

  void apply(double v_ref, const TwinState& s, DriverInput* u) const {
    const double err = v_ref - s.vx;
    double t = feedforward_torque(*cfg, mass, v_ref) + kp * err;
    u->drive_torque = std::clamp(t, 0.0, t_max);
    u->brake_torque = err < -1.0 ? std::min(350.0 * (-err - 1.0), 2500.0) : 0.0;
  }
};

// Stop-and-go city driving: saw-tooth speed profile alternating firm
// acceleration and firm braking between a low and a high speed, with short
// decisive corners sprinkled in. Dwell near zero longitudinal acceleration is
// kept minimal on purpose: pedal swaps are rate-limited but quick.
struct UrbanDriver : DriverModel {
  struct Turn {
    double t0, dur, amp;
  };

  const TwinConfig* cfg;
  double mass;
  double v_lo, v_hi;
  bool braking = false;
  double a_acc = 2.5, a_brk = 2.8;
  double torque_rate;  // N m/s slew on both pedals
  double drive_cmd = 0.0, brake_cmd = 0.0;
  double t_prev = 0.0;
  Rng seg_rng;
  std::vector<Turn> turns;

  UrbanDriver(const TwinConfig& c, double m, double duration, Rng rng)
      : cfg(&c), mass(m), seg_rng(rng.split(1)) {
    v_lo = 8.0;
    v_hi = 16.5;
    torque_rate = 22000.0;
    resample_targets();
    Rng turn_rng = rng.split(2);
    double tev = turn_rng.uniform(5.0, 9.0);
    double sign = turn_rng.uniform01() < 0.5 ? 1.0 : -1.0;
    while (tev < duration) {
      const double dur = turn_rng.uniform(2.2, 3.0);
      turns.push_back({tev, dur, sign * turn_rng.uniform(0.40, 0.52)});
      sign = -sign;
      tev += dur + turn_rng.uniform(7.0, 12.0);
    }
  }

  void resample_targets() {
    a_acc = seg_rng.uniform(2.55, 2.75);
    a_brk = seg_rng.uniform(2.7, 2.95);
  }

  DriverInput eval(double t, const TwinState& s) override {
    const double dt = std::max(1.0e-4, t - t_prev);
    t_prev = t;
    if (!braking && s.vx >= v_hi) {
      braking = true;
      resample_targets();
    } else if (braking && s.vx <= v_lo) {
      braking = false;
      resample_targets();
    }
    const double r = cfg->wheel_radius;
    const double m_eff = mass + 4.0 * cfg->wheel_inertia / (r * r);
    const double t_resist = feedforward_torque(*cfg, mass, s.vx);
    double drive_tgt = 0.0, brake_tgt = 0.0;
    if (braking) {
      brake_tgt = std::clamp(r * m_eff * a_brk - t_resist, 0.0, 4000.0);
    } else {
      drive_tgt = std::clamp(r * m_eff * a_acc + t_resist, 0.0, 4000.0);
    }
    auto slew = [&](double cur, double tgt) {
      const double step = torque_rate * dt;
      return cur + std::clamp(tgt - cur, -step, step);
    };
    drive_cmd = slew(drive_cmd, drive_tgt);
    brake_cmd = slew(brake_cmd, brake_tgt);
    DriverInput u;
    u.drive_torque = drive_cmd;
    u.brake_torque = brake_cmd;
    for (const Turn& turn : turns) {
      if (t >= turn.t0 && t < turn.t0 + turn.dur) {
        // Trapezoidal steer pulse with smoothstep edges: crisp gate crossings.
        const double ramp = 0.35;
        const double x = t - turn.t0;
        double w = 1.0;
        if (x < ramp) w = x / ramp;
        if (turn.dur - x < ramp) w = (turn.dur - x) / ramp;
        w = w * w * (3.0 - 2.0 * w);
        u.steer = turn.amp * w;
        break;
      }
    }
    return u;
  }
};

struct SweptSteerDriver : DriverModel {
  SpeedHold hold;
  double v_ref, duration, amp, f_end;
  // The steering envelope opens only once the instantaneous frequency passes
  // f_on. Rate derivatives are differentiated measurements, so their noise
  // floor is set by the run-wide rate rms; concentrating the yaw-rate energy
  // in the high-frequency part of the sweep keeps the rate amplitude needed
  // by the cornering gate while maximizing the angular-acceleration signal
  // against that floor.
  double f_on = 3.3, f_full = 3.5;

  SweptSteerDriver(const TwinConfig& cfg, double mass, double v, double dur)
      : v_ref(v), duration(dur), amp(0.56), f_end(4.0) {
    hold.cfg = &cfg;
    hold.mass = mass;
  }

  DriverInput eval(double t, const TwinState& s) override {
    DriverInput u;
    hold.apply(v_ref, s, &u);
    // Linear chirp from 0 Hz to f_end at t = duration.
    const double f_inst = f_end * t / duration;
    const double phase = kTau * f_end * t * t / (2.0 * duration);
    double w = (f_inst - f_on) / (f_full - f_on);
    w = std::clamp(w, 0.0, 1.0);
    w = w * w * (3.0 - 2.0 * w);
    u.steer = amp * w * std::sin(phase);
    return u;
  }
};

struct RoughRoadDriver : DriverModel {
  SpeedHold hold;
  double v_ref;
  // Periodic drive/brake pulse bursts excite pitch well above the sprung-mass
  // resonance. Pitch acceleration holds its amplitude with burst frequency
  // while the pitch-rate rms (which sets the rate channels' noise floor)
  // shrinks, so the differentiated pitch signal stands clear of its noise.
  // Net longitudinal impulse per cycle is zero; speed ripple < 0.1 m/s.
  double burst_f = 3.0;      // Hz, pulse alternation inside a burst
  double burst_len = 1.0;    // s
  double burst_period = 4.0; // s
  double pulse_torque = 950.0;  // Nm peak, split drive/brake by sign

  RoughRoadDriver(const TwinConfig& cfg, double mass, double v) : v_ref(v) {
    hold.cfg = &cfg;
    hold.mass = mass;
  }

  DriverInput eval(double t, const TwinState& s) override {
    DriverInput u;
    hold.apply(v_ref, s, &u);
    const double tb = std::fmod(t, burst_period);
    if (tb < burst_len) {
      const double ramp = 0.15;
      double w = 1.0;
      if (tb < ramp) w = tb / ramp;
      if (burst_len - tb < ramp) w = (burst_len - tb) / ramp;
      w = w * w * (3.0 - 2.0 * w);
      const double pulse = pulse_torque * w * std::sin(kTau * burst_f * tb);
      if (pulse >= 0.0) {
        u.drive_torque += pulse;
      } else {
        u.brake_torque += -pulse;
      }
    }
    return u;
  }
};

struct LaneChangeBrakingDriver : DriverModel {
  SpeedHold hold;
  double v0;

  LaneChangeBrakingDriver(const TwinConfig& cfg, double mass, double v)
      : v0(v) {
    hold.cfg = &cfg;
    hold.mass = mass;
  }

  DriverInput eval(double t, const TwinState& s) override {
    DriverInput u;
    const double t_lc = 8.0;    // lane change out
    const double t_back = 11.2; // lane change back
    const double t_brk = 15.0;  // brake start
    if (t < t_lc) {
      hold.apply(v0, s, &u);
    } else if (t < t_lc + 2.2) {
      hold.apply(v0, s, &u);
      u.steer = 0.5 * std::sin(kTau * (t - t_lc) / 2.2);
    } else if (t < t_back) {
      hold.apply(v0, s, &u);
    } else if (t < t_back + 2.2) {
      hold.apply(v0, s, &u);
      u.steer = -0.5 * std::sin(kTau * (t - t_back) / 2.2);
    } else if (t < t_brk) {
      hold.apply(v0, s, &u);
    } else if (s.vx > 8.0 && t < t_brk + 8.0) {
      u.brake_torque = 3200.0;
    } else {
      hold.apply(8.0, s, &u);
    }
    return u;
  }
};

struct CircuitDriver : DriverModel {
  struct Block {
    int kind;  // 0 accel-to-vhi, 1 S-sweep, 2 brake-to-vlo, 3 curve, 4 cruise
    double dur, amp, freq;
  };
  std::vector<Block> blocks;
  std::vector<double> block_start;
  SpeedHold hold;
  double v_hi = 17.0, v_lo = 9.0;
  int last_block = -1;
  double v_hold = 0.0;

  CircuitDriver(const TwinConfig& cfg, double mass, double duration, Rng rng) {
    hold.cfg = &cfg;
    hold.mass = mass;
    double t = 0.0;
    double sign = 1.0;
    while (t < duration + 5.0) {
      auto push = [&](int k, double dur, double amp, double freq) {
        blocks.push_back({k, dur, amp, freq});
        block_start.push_back(t);
        t += dur;
      };
      push(0, rng.uniform(4.0, 6.0), 0.0, 0.0);
      push(1, rng.uniform(7.0, 9.0), rng.uniform(0.42, 0.52),
           rng.uniform(0.4, 0.55));
      push(2, rng.uniform(2.5, 3.5), 0.0, 0.0);
      push(3, rng.uniform(5.0, 7.0), sign * rng.uniform(0.5, 0.62),
           rng.uniform(0.12, 0.18));
      push(4, rng.uniform(2.0, 3.0), 0.0, 0.0);
      sign = -sign;
    }
  }

  DriverInput eval(double t, const TwinState& s) override {
    DriverInput u;
    size_t idx = blocks.size() - 1;
    for (size_t i = 0; i < blocks.size(); ++i) {
      if (t < block_start[i] + blocks[i].dur) {
        idx = i;
        break;
      }
    }
    if (static_cast<int>(idx) != last_block) {
      last_block = static_cast<int>(idx);
      v_hold = s.vx;
    }
    const Block& b = blocks[idx];
    const double tau = t - block_start[idx];
    switch (b.kind) {
      case 0:
        u.drive_torque = 2800.0 * std::clamp((v_hi - s.vx) / 1.0, 0.0, 1.0);
        break;
      case 1: {
        hold.apply(v_hold, s, &u);
        const double ramp = std::clamp(tau / 1.0, 0.0, 1.0) *
                            std::clamp((b.dur - tau) / 1.0, 0.0, 1.0);
        u.steer = b.amp * ramp * std::sin(kTau * b.freq * tau);
        break;
      }
      case 2:
        u.brake_torque = 3000.0 * std::clamp((s.vx - v_lo) / 1.0, 0.0, 1.0);
        break;
      case 3: {
        hold.apply(v_hold, s, &u);
        const double x = tau / b.dur;
        const double shape = std::sin(M_PI * x);
        u.steer = b.amp * shape * shape;
        break;
      }
      case 4:
        hold.apply(v_hold, s, &u);
        break;
    }
    return u;
  }
};

std::unique_ptr<DriverModel> make_driver(const ScenarioSpec& spec,
                                         const TwinConfig& cfg, double mass,
                                         Rng rng) {
  switch (spec.kind) {
    case ScenarioKind::kUrban:
      return std::make_unique<UrbanDriver>(cfg, mass, spec.duration_s, rng);
    case ScenarioKind::kSweptSteer:
      return std::make_unique<SweptSteerDriver>(cfg, mass, spec.v_nominal,
                                                spec.duration_s);
    case ScenarioKind::kRoughRoad:
      return std::make_unique<RoughRoadDriver>(cfg, mass, spec.v_nominal);
    case ScenarioKind::kLaneChangeBraking:
      return std::make_unique<LaneChangeBrakingDriver>(cfg, mass,
                                                       spec.v_nominal);
    case ScenarioKind::kCircuit:
      return std::make_unique<CircuitDriver>(cfg, mass, spec.duration_s, rng);
  }
  throw std::invalid_argument("scenario: unknown kind");
}

}  // namespace

ScenarioKind scenario_kind_from_string(const std::string& name) {
  if (name == "urban") return ScenarioKind::kUrban;
  if (name == "swept_steer") return ScenarioKind::kSweptSteer;
  if (name == "rough_road") return ScenarioKind::kRoughRoad;
  if (name == "lane_change_braking") return ScenarioKind::kLaneChangeBraking;
  if (name == "circuit") return ScenarioKind::kCircuit;
  throw std::invalid_argument("scenario: unknown kind '" + name + "'");
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kUrban: return "urban";
    case ScenarioKind::kSweptSteer: return "swept_steer";
    case ScenarioKind::kRoughRoad: return "rough_road";
    case ScenarioKind::kLaneChangeBraking: return "lane_change_braking";
    case ScenarioKind::kCircuit: return "circuit";
  }
  return "unknown";
}

ScenarioSpec scenario_spec_from_config(const ConfigMap& cfg) {
  ScenarioSpec s;
  s.kind = scenario_kind_from_string(cfg.get_str("scenario.kind", "urban"));
  s.duration_s = cfg.get_double("scenario.duration_s", s.duration_s);
  s.fs = cfg.get_double("scenario.fs", s.fs);
  s.v_nominal = cfg.get_double("scenario.v_nominal", s.v_nominal);
  double default_sigma = 0.0;
  if (s.kind == ScenarioKind::kRoughRoad) default_sigma = 0.063;
  if (s.kind == ScenarioKind::kCircuit) default_sigma = 0.02;
  s.road_sigma_z = cfg.get_double("scenario.road_sigma_z", default_sigma);
  s.road_corruption = cfg.get_double("scenario.road_corruption", 0.0);
  s.snr = cfg.get_double("scenario.snr", 0.0);
  s.truth_dev.dm = cfg.get_double("scenario.true_dm", 0.0);
  s.truth_dev.djxx = cfg.get_double("scenario.true_djxx", 0.0);
  s.truth_dev.djyy = cfg.get_double("scenario.true_djyy", 0.0);
  s.truth_dev.djzz = cfg.get_double("scenario.true_djzz", 0.0);
  s.drag_scale = cfg.get_double("scenario.drag_scale", 1.0);
  s.tire_stiffness_scale = cfg.get_double("scenario.tire_stiffness_scale", 1.0);
  s.seed = static_cast<uint64_t>(cfg.get_int("scenario.seed", 1));
  if (s.duration_s <= 0.0 || s.fs <= 0.0) {
    throw std::invalid_argument("scenario: duration and fs must be positive");
  }
  return s;
}

double TruthRun::beta(int k) const {
  const TwinState& s = states.at(static_cast<size_t>(k));
  return std::atan2(s.vy, std::max(std::abs(s.vx), 0.5));
}

std::vector<double> make_road_profile(int n, double dt, double sigma_z,
                                      Rng& rng) {
  std::vector<double> z(static_cast<size_t>(std::max(n, 0)), 0.0);
  if (sigma_z <= 0.0) return z;
  for (int k = 1; k < n; ++k) {
    z[k] = z[k - 1] + dt * rng.normal(0.0, sigma_z);
  }
  return z;
}

std::vector<double> corrupt_road(const std::vector<double>& z, double eps,
                                 Rng& rng) {
  std::vector<double> out = z;
  if (eps <= 0.0) return out;
  for (double& v : out) {
    v *= 1.0 + eps * (2.0 * rng.uniform01() - 1.0);
  }
  return out;
}

std::array<double, 4> add_measurement_noise(std::vector<MeasurementVec>& meas,
                                            double snr, Rng& rng) {
  std::array<double, 4> sigmas{};
  if (snr <= 0.0 || meas.empty()) return sigmas;
  const int channels[4] = {0, 3, 4, 5};  // ax, wx, wy, wz
  for (int c = 0; c < 4; ++c) {
    double sum_sq = 0.0;
    for (const MeasurementVec& m : meas) {
      sum_sq += m.v[channels[c]] * m.v[channels[c]];
    }
    const double rms = std::sqrt(sum_sq / meas.size());
    if (rms < 1e-12) continue;
    sigmas[c] = rms / std::sqrt(snr);
  }
  for (MeasurementVec& m : meas) {
    for (int c = 0; c < 4; ++c) {
      if (sigmas[c] > 0.0) m.v[channels[c]] += rng.normal(0.0, sigmas[c]);
    }
  }
  return sigmas;
}

TruthRun build_truth_run(const VehicleParams& base, const TwinConfig& nominal,
                         const ScenarioSpec& spec) {
  TwinConfig plant_cfg = nominal;
  plant_cfg.drag_scale *= spec.drag_scale;
  plant_cfg.tire_stiffness_scale *= spec.tire_stiffness_scale;

  TwinSim plant(base, plant_cfg);
  plant.set_param_deviation(spec.truth_dev);

  TruthRun run;
  run.dt = 1.0 / spec.fs;
  run.truth_dev = spec.truth_dev;
  run.x0 = plant.cruise_state(spec.v_nominal);
  plant.set_state(run.x0);

  const int n = static_cast<int>(std::llround(spec.duration_s * spec.fs));
  const Rng root(spec.seed);
  Rng rng_road = root.split(1);
  Rng rng_corrupt = root.split(2);
  Rng rng_driver = root.split(3);
  Rng rng_noise = root.split(4);

  const std::vector<double> road =
      make_road_profile(n, run.dt, spec.road_sigma_z, rng_road);
  const std::vector<double> road_twin =
      corrupt_road(road, spec.road_corruption, rng_corrupt);
  const int delay =
      spec.v_nominal > 0.5
          ? static_cast<int>(std::llround(base.wheelbase /
                                          (spec.v_nominal * run.dt)))
          : 0;

  auto driver = make_driver(spec, nominal, base.mass, rng_driver);

  run.plant_inputs.reserve(n);
  run.twin_inputs.reserve(n);
  run.clean_meas.reserve(n);
  run.states.reserve(n);
  for (int k = 0; k < n; ++k) {
    DriverInput u = driver->eval(k * run.dt, plant.state());
    u.road_z_front = road[k];
    u.road_z_rear = k >= delay ? road[k - delay] : 0.0;
    DriverInput ut = u;
    ut.road_z_front = road_twin[k];
    ut.road_z_rear = k >= delay ? road_twin[k - delay] : 0.0;
    plant.step(u, run.dt);
    run.plant_inputs.push_back(u);
    run.twin_inputs.push_back(ut);
    run.clean_meas.push_back(plant.readout());
    run.states.push_back(plant.state());
  }
  run.meas = run.clean_meas;
  add_measurement_noise(run.meas, spec.snr, rng_noise);
  return run;
}

}  // namespace til
