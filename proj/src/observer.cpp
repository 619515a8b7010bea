#include "til/observer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace til {
namespace {

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

double clampd(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

}  // namespace

double GainSet::by_index(int i) const {
  switch (i) {
    case 0: return k_w_w;
    case 1: return k_ax_vx;
    case 2: return k_ay_vy;
    case 3: return k_wy_wy;
    case 4: return k_wz_wz;
    case 5: return k_ax_dm;
    case 6: return k_dwx_djxx;
    case 7: return k_dwy_djyy;
    case 8: return k_dwz_djzz;
  }
  throw std::out_of_range("gain index");
}

double& GainSet::by_index(int i) {
  switch (i) {
    case 0: return k_w_w;
    case 1: return k_ax_vx;
    case 2: return k_ay_vy;
    case 3: return k_wy_wy;
    case 4: return k_wz_wz;
    case 5: return k_ax_dm;
    case 6: return k_dwx_djxx;
    case 7: return k_dwy_djyy;
    case 8: return k_dwz_djzz;
  }
  throw std::out_of_range("gain index");
}

const char* GainSet::name(int i) {
  static const char* names[kCount] = {
      "k_w_w",      "k_ax_vx",     "k_ay_vy",     "k_wy_wy",   "k_wz_wz",
      "k_ax_dm",    "k_dwx_djxx",  "k_dwy_djyy",  "k_dwz_djzz"};
  if (i < 0 || i >= kCount) throw std::out_of_range("gain index");
  return names[i];
}

void GainSet::check() const {
  for (int i = 0; i < kCount; ++i) {
    if (!std::isfinite(by_index(i))) {
      throw std::invalid_argument(std::string("gains: non-finite ") + name(i));
    }
  }
  if (!(yaw_gate > 0.0) || !std::isfinite(yaw_gate)) {
    throw std::invalid_argument("gains: yaw gate must be positive");
  }
}

GainSet gains_from_config(const ConfigMap& cfg) {
  GainSet g;
  for (int i = 0; i < GainSet::kCount; ++i) {
    g.by_index(i) = cfg.get_double(std::string("gains.") + GainSet::name(i),
                                   g.by_index(i));
  }
  g.yaw_gate = cfg.get_double("gains.yaw_gate_deg",
                              g.yaw_gate * 180.0 / M_PI) *
               M_PI / 180.0;
  g.check();
  return g;
}

GainBounds gain_bounds_from_config(const ConfigMap& cfg) {
  GainBounds b;
  for (int i = 0; i < GainSet::kCount; ++i) {
    const std::string base = std::string("gains.") + GainSet::name(i);
    b.lo[i] = cfg.get_double(base + "_lo", b.lo[i]);
    b.hi[i] = cfg.get_double(base + "_hi", b.hi[i]);
    if (!(b.lo[i] <= b.hi[i])) {
      throw std::invalid_argument("gains: bound lower > upper for " + base);
    }
  }
  return b;
}

void gains_to_config(const GainSet& g, ConfigMap* cfg) {
  for (int i = 0; i < GainSet::kCount; ++i) {
    cfg->set_double(std::string("gains.") + GainSet::name(i), g.by_index(i));
  }
  cfg->set_double("gains.yaw_gate_deg", g.yaw_gate * 180.0 / M_PI);
}

std::array<double, kNumCorrectable> correct_states(const MeasurementVec& y,
                                                   const MeasurementVec& y_twin,
                                                   const GainSet& g) {
  std::array<double, kNumCorrectable> delta{};
  delta[static_cast<int>(Correctable::kVx)] = g.k_ax_vx * (y.ax() - y_twin.ax());
  delta[static_cast<int>(Correctable::kVy)] = g.k_ay_vy * (y.ay() - y_twin.ay());
  delta[static_cast<int>(Correctable::kPitchRate)] =
      g.k_wy_wy * (y.wy() - y_twin.wy());
  delta[static_cast<int>(Correctable::kYawRate)] =
      g.k_wz_wz * (y.wz() - y_twin.wz());
  for (int i = 0; i < 4; ++i) {
    delta[static_cast<int>(Correctable::kWheelFL) + i] =
        g.k_w_w * (y.wheel(i) - y_twin.wheel(i));
  }
  return delta;
}

double correct_mass(const MeasurementVec& y, const MeasurementVec& y_twin,
                    const GainSet& g) {
  if (std::abs(y.wz()) > g.yaw_gate) return 0.0;
  const double eps = y.ax() >= 0.0 ? 1.0 : -1.0;
  return g.k_ax_dm * eps * (y.ax() - y_twin.ax());
}

std::pair<double, double> correct_roll_yaw_inertia(double dwx_meas,
                                                   double dwx_twin,
                                                   double dwz_meas,
                                                   double dwz_twin,
                                                   const GainSet& g) {
  const double djxx = g.k_dwx_djxx * (dwx_meas - dwx_twin) * sgn(dwx_meas);
  const double djzz = g.k_dwz_djzz * (dwz_meas - dwz_twin) * sgn(dwz_meas);
  return {djxx, djzz};
}

double correct_pitch_inertia(double dwy_meas, double dwy_twin,
                             const GainSet& g) {
  return g.k_dwy_djyy * (dwy_meas - dwy_twin) * sgn(dwy_meas);
}

int StageSchedule::stage_at(double t) const {
  const double durs[3] = {mass_s, jyy_s, jxxjzz_s};
  int last_active = -1;
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) {
    if (durs[i] <= 0.0) continue;
    last_active = i;
    if (t < acc + durs[i]) return i;
    acc += durs[i];
  }
  return last_active;
}

ObserverConfig observer_config_from_config(const ConfigMap& cfg) {
  ObserverConfig o;
  o.gains = gains_from_config(cfg);
  o.schedule.mass_s = cfg.get_double("stages.mass_s", o.schedule.mass_s);
  o.schedule.jyy_s = cfg.get_double("stages.jyy_s", o.schedule.jyy_s);
  o.schedule.jxxjzz_s =
      cfg.get_double("stages.jxxjzz_s", o.schedule.jxxjzz_s);
  o.diff_cutoff_hz = cfg.get_double("observer.diff_cutoff_hz", o.diff_cutoff_hz);
  o.corner_gate = cfg.get_double("observer.corner_gate_deg",
                                 o.corner_gate * 180.0 / M_PI) *
                  M_PI / 180.0;
  o.pitch_gate = cfg.get_double("observer.pitch_gate_dps2",
                                o.pitch_gate * 180.0 / M_PI) *
                 M_PI / 180.0;
  o.dm_min = cfg.get_double("observer.dm_min", o.dm_min);
  o.dm_max = cfg.get_double("observer.dm_max", o.dm_max);
  o.djxx_min = cfg.get_double("observer.djxx_min", o.djxx_min);
  o.djxx_max = cfg.get_double("observer.djxx_max", o.djxx_max);
  o.djyy_min = cfg.get_double("observer.djyy_min", o.djyy_min);
  o.djyy_max = cfg.get_double("observer.djyy_max", o.djyy_max);
  o.djzz_min = cfg.get_double("observer.djzz_min", o.djzz_min);
  o.djzz_max = cfg.get_double("observer.djzz_max", o.djzz_max);
  if (o.diff_cutoff_hz <= 0.0) {
    throw std::invalid_argument("observer: differentiator cutoff must be positive");
  }
  if (o.corner_gate <= 0.0 || !std::isfinite(o.corner_gate)) {
    throw std::invalid_argument("observer: cornering threshold must be positive");
  }
  if (o.pitch_gate < 0.0 || !std::isfinite(o.pitch_gate)) {
    throw std::invalid_argument("observer: pitch threshold must be non-negative");
  }
  return o;
}

std::vector<std::string> estimation_log_columns() {
  return {"t",        "stage",    "dm",       "djxx",      "djyy",
          "djzz",     "true_dm",  "true_djxx", "true_djyy", "true_djzz",
          "beta_twin", "beta_true", "res_ax",  "res_ay",    "res_wy",
          "res_wz",   "res_dwx",  "res_dwy",  "res_dwz"};
}

#define TIL_SERIES(name, field)                          \
  std::vector<double> EstimationResult::name() const {   \
    std::vector<double> v;                               \
    v.reserve(samples.size());                           \
    for (const EstimationSample& s : samples) v.push_back(field); \
    return v;                                            \
  }
TIL_SERIES(dm_series, s.dev.dm)
TIL_SERIES(djxx_series, s.dev.djxx)
TIL_SERIES(djyy_series, s.dev.djyy)
TIL_SERIES(djzz_series, s.dev.djzz)
TIL_SERIES(beta_twin_series, s.beta_twin)
TIL_SERIES(beta_true_series, s.beta_true)
#undef TIL_SERIES

EstimationResult run_estimation(const VehicleParams& base,
                                const TwinConfig& twin_cfg,
                                const TruthRun& run,
                                const ObserverConfig& ocfg,
                                const ParamDeviation& init_dev,
                                CsvWriter* log) {
  ocfg.gains.check();
  const GainSet& g = ocfg.gains;
  const double dt = run.dt;

  TwinSim twin(base, twin_cfg);
  twin.set_state(run.x0);
  ParamDeviation dev = init_dev;
  dev.dm = clampd(dev.dm, ocfg.dm_min, ocfg.dm_max);
  dev.djxx = clampd(dev.djxx, ocfg.djxx_min, ocfg.djxx_max);
  dev.djyy = clampd(dev.djyy, ocfg.djyy_min, ocfg.djyy_max);
  dev.djzz = clampd(dev.djzz, ocfg.djzz_min, ocfg.djzz_max);
  twin.set_param_deviation(dev);

  RateDifferentiator dwx_m(dt, ocfg.diff_cutoff_hz), dwx_t(dt, ocfg.diff_cutoff_hz);
  RateDifferentiator dwy_m(dt, ocfg.diff_cutoff_hz), dwy_t(dt, ocfg.diff_cutoff_hz);
  RateDifferentiator dwz_m(dt, ocfg.diff_cutoff_hz), dwz_t(dt, ocfg.diff_cutoff_hz);

  EstimationResult result;
  result.samples.reserve(run.samples());

  for (int k = 0; k < run.samples(); ++k) {
    EstimationSample s;
    s.t = (k + 1) * dt;
    try {
      twin.step(run.twin_inputs[k], dt);
    } catch (const DivergenceError& e) {
      result.diverged = true;
      result.diverged_at = k;
      result.diverged_reason = e.what();
      break;
    }
    const MeasurementVec yt = twin.readout();
    const MeasurementVec& y = run.meas[k];

    const double fdwx_m = dwx_m.step(y.wx());
    const double fdwx_t = dwx_t.step(yt.wx());
    const double fdwy_m = dwy_m.step(y.wy());
    const double fdwy_t = dwy_t.step(yt.wy());
    const double fdwz_m = dwz_m.step(y.wz());
    const double fdwz_t = dwz_t.step(yt.wz());

    const std::array<double, kNumCorrectable> delta = correct_states(y, yt, g);
    try {
      twin.inject(delta);
    } catch (const std::invalid_argument& e) {
      // Correction rejected by the twin's state invariants: oversized gains.
      result.diverged = true;
      result.diverged_at = k;
      result.diverged_reason = e.what();
      break;
    }
    dwy_t.compensate(delta[static_cast<int>(Correctable::kPitchRate)]);
    dwz_t.compensate(delta[static_cast<int>(Correctable::kYawRate)]);

    s.stage = ocfg.schedule.stage_at(k * dt);
    switch (s.stage) {
      case 0:
        dev.dm += correct_mass(y, yt, g);
        break;
      case 1:
        if (std::abs(y.wz()) <= g.yaw_gate &&
            std::abs(fdwy_t) > ocfg.pitch_gate) {
          dev.djyy += correct_pitch_inertia(fdwy_m, fdwy_t, g);
        }
        break;
      case 2:
        if (std::abs(y.wz()) > ocfg.corner_gate) {
          const auto [ddjxx, ddjzz] =
              correct_roll_yaw_inertia(fdwx_m, fdwx_t, fdwz_m, fdwz_t, g);
          dev.djxx += ddjxx;
          dev.djzz += ddjzz;
        }
        break;
      default:
        break;
    }
    dev.dm = clampd(dev.dm, ocfg.dm_min, ocfg.dm_max);
    dev.djxx = clampd(dev.djxx, ocfg.djxx_min, ocfg.djxx_max);
    dev.djyy = clampd(dev.djyy, ocfg.djyy_min, ocfg.djyy_max);
    dev.djzz = clampd(dev.djzz, ocfg.djzz_min, ocfg.djzz_max);
    twin.set_param_deviation(dev);

    s.dev = dev;
    const TwinState& ts = twin.state();
    s.beta_twin = std::atan2(ts.vy, std::max(std::abs(ts.vx), 0.5));
    s.beta_true = run.beta(k);
    s.res_ax = y.ax() - yt.ax();
    s.res_ay = y.ay() - yt.ay();
    s.res_wy = y.wy() - yt.wy();
    s.res_wz = y.wz() - yt.wz();
    s.res_dwx = fdwx_m - fdwx_t;
    s.res_dwy = fdwy_m - fdwy_t;
    s.res_dwz = fdwz_m - fdwz_t;
    result.samples.push_back(s);

    if (log) {
      log->row({s.t, static_cast<double>(s.stage), s.dev.dm, s.dev.djxx,
                s.dev.djyy, s.dev.djzz, run.truth_dev.dm, run.truth_dev.djxx,
                run.truth_dev.djyy, run.truth_dev.djzz, s.beta_twin,
                s.beta_true, s.res_ax, s.res_ay, s.res_wy, s.res_wz, s.res_dwx,
                s.res_dwy, s.res_dwz});
    }
  }
  result.final_dev = dev;
  return result;
}

}  // namespace til
