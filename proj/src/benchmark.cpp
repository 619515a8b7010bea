#include "til/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "til/rigid_body.hpp"
#include "til/twin.hpp"

namespace til {

namespace {

void check_axis(const PacejkaCoeffs& c, const char* axis) {
  if (!(c.b > 0.0) || !(c.c > 0.0) || !(c.d > 0.0)) {
    throw std::invalid_argument(std::string("bench tire ") + axis +
                                ": B, C, D must be positive");
  }
  if (!(c.e < 1.0)) {
    throw std::invalid_argument(std::string("bench tire ") + axis +
                                ": E must be below 1");
  }
}

}  // namespace

double pacejka(const PacejkaCoeffs& c, double slip, double fz) {
  const double bs = c.b * slip;
  return fz * c.d * std::sin(c.c * std::atan(bs - c.e * (bs - std::atan(bs))));
}

void BenchParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("bench: mass must be positive");
  if (!(jzz > 0.0)) throw std::invalid_argument("bench: jzz must be positive");
  if (!(lf > 0.0) || !(lr > 0.0) || !(track > 0.0)) {
    throw std::invalid_argument("bench: geometry must be positive");
  }
  if (!(cm_height > 0.0)) {
    throw std::invalid_argument("bench: CM height must be positive");
  }
  if (!(wheel_radius > 0.0) || !(steer_ratio > 0.0)) {
    throw std::invalid_argument("bench: wheel radius and steer ratio must be positive");
  }
  if (!(ts > 0.0)) throw std::invalid_argument("bench: ts must be positive");
  if (!(slip_floor > 0.0)) {
    throw std::invalid_argument("bench: slip floor must be positive");
  }
  check_axis(tire_x, "x");
  check_axis(tire_y, "y");
}

BenchParams bench_params_from_config(const ConfigMap& cfg) {
  const VehicleParams veh = vehicle_params_from_config(cfg);
  const TwinConfig tc = twin_config_from_config(cfg);
  BenchParams p;
  p.mass = veh.mass;
  p.jzz = veh.jzz;
  p.lf = veh.lf;
  p.lr = veh.lr;
  p.track = veh.track;
  p.cm_height = veh.cm.z();
  p.wheel_radius = tc.wheel_radius;
  p.steer_ratio = tc.steer_ratio;
  p.gravity = tc.gravity;
  p.ts = cfg.get_double("bench.ts", p.ts);
  p.slip_floor = cfg.get_double("bench.slip_floor", p.slip_floor);
  p.tire_x.b = cfg.get_double("bench.tire_bx", p.tire_x.b);
  p.tire_x.c = cfg.get_double("bench.tire_cx", p.tire_x.c);
  p.tire_x.d = cfg.get_double("bench.tire_dx", p.tire_x.d);
  p.tire_x.e = cfg.get_double("bench.tire_ex", p.tire_x.e);
  p.tire_y.b = cfg.get_double("bench.tire_by", p.tire_y.b);
  p.tire_y.c = cfg.get_double("bench.tire_cy", p.tire_y.c);
  p.tire_y.d = cfg.get_double("bench.tire_dy", p.tire_y.d);
  p.tire_y.e = cfg.get_double("bench.tire_ey", p.tire_y.e);
  p.validate();
  return p;
}

BenchGains bench_gains_from_config(const ConfigMap& cfg) {
  BenchGains g;
  g.k_ax_vx = cfg.get_double("bench_gains.k_ax_vx", g.k_ax_vx);
  g.k_wz_wz = cfg.get_double("bench_gains.k_wz_wz", g.k_wz_wz);
  g.k_ax_dm = cfg.get_double("bench_gains.k_ax_dm", g.k_ax_dm);
  g.k_ay_vy = cfg.get_double("bench_gains.k_ay_vy", g.k_ay_vy);
  g.yaw_gate = cfg.get_double("bench_gains.yaw_gate_deg",
                              g.yaw_gate * 180.0 / M_PI) *
               M_PI / 180.0;
  if (!(g.yaw_gate > 0.0)) {
    throw std::invalid_argument("bench_gains: yaw gate must be positive");
  }
  return g;
}

NormalLoads estimate_normal_loads(double ax, double ay, double mass,
                                  const BenchParams& p) {
  const double wb = p.lf + p.lr;
  const double front = mass * p.gravity * p.lr / wb / 2.0 -
                       mass * ax * p.cm_height / (2.0 * wb);
  const double rear = mass * p.gravity * p.lf / wb / 2.0 +
                      mass * ax * p.cm_height / (2.0 * wb);
  const double lat = mass * ay * p.cm_height / (2.0 * p.track);
  NormalLoads n;
  n.fz = {front - lat, front + lat, rear - lat, rear + lat};
  for (double& f : n.fz) {
    if (f < 0.0) {
      f = 0.0;
      n.clamped = true;
    }
  }
  return n;
}

BenchSlips bench_slips(const BenchState& s, double delta,
                       const std::array<double, 4>& wheel_w,
                       const BenchParams& p) {
  const double cd = std::cos(delta), sd = std::sin(delta);
  BenchSlips out;
  for (int i = 0; i < 4; ++i) {
    const bool front = i < 2;
    const double yw = (i % 2 == 0 ? 0.5 : -0.5) * p.track;
    const double xw = front ? p.lf : -p.lr;
    // Contact-point velocity in the body frame, then in the wheel frame.
    const double vcx = s.vx - s.wz * yw;
    const double vcy = s.vy + s.wz * xw;
    const double vwx = front ? cd * vcx + sd * vcy : vcx;
    const double vwy = front ? -sd * vcx + cd * vcy : vcy;
    const double rw = p.wheel_radius * wheel_w[i];
    const double den = std::max({rw, vwx, p.slip_floor});
    out.lambda[i] = (rw - vwx) / den;
    // Slip angle opposing the lateral contact velocity, so that a
    // positive-slope lateral force characteristic is restoring.
    out.alpha[i] = std::atan2(-vwy, std::max(vwx, p.slip_floor));
  }
  return out;
}

namespace {

struct ForceSums {
  double fx_t = 0.0, fy_t = 0.0, mz_t = 0.0;
};

ForceSums total_forces(const BenchState& s, const BenchInput& u, double delta,
                       const BenchParams& p) {
  const double meff = p.mass + s.dm;
  const NormalLoads loads = estimate_normal_loads(u.ax_meas, u.ay_meas, meff, p);
  const BenchSlips sl = bench_slips(s, delta, u.wheel_w, p);
  std::array<double, 4> fx{}, fy{};
  for (int i = 0; i < 4; ++i) {
    fx[i] = pacejka(p.tire_x, sl.lambda[i], loads.fz[i]);
    fy[i] = pacejka(p.tire_y, sl.alpha[i], loads.fz[i]);
  }
  const double cd = std::cos(delta), sd = std::sin(delta);
  const double t2 = p.track / 2.0;
  ForceSums f;
  f.fx_t = (fx[0] + fx[1]) * cd - (fy[0] + fy[1]) * sd + fx[2] + fx[3];
  f.fy_t = (fx[0] + fx[1]) * sd + (fy[0] + fy[1]) * cd + fy[2] + fy[3];
  f.mz_t = p.lf * (fy[0] + fy[1]) * cd + t2 * (fy[0] - fy[1]) * sd -
           t2 * (fx[0] - fx[1]) * cd + p.lf * (fx[0] + fx[1]) * sd -
           p.lr * (fy[2] + fy[3]) - t2 * (fx[2] - fx[3]);
  return f;
}

}  // namespace

BenchState bench_step(const BenchState& s, const BenchInput& u,
                      const BenchParams& p, const BenchGains& g) {
  const double delta = u.steer / p.steer_ratio;
  const double meff = p.mass + s.dm;
  const ForceSums f = total_forces(s, u, delta, p);

  // Model outputs at the current state.
  const double y_ax = f.fx_t / meff + s.vy * s.wz;
  const double y_ay = f.fy_t / meff - s.vx * s.wz;
  const double y_wz = s.wz;

  // Explicit-Euler prediction plus output-residual corrections.
  BenchState n;
  n.vx = s.vx + p.ts * (f.fx_t / meff + s.vy * s.wz) +
         g.k_ax_vx * (u.ax_meas - y_ax);
  n.vy = s.vy + p.ts * (f.fy_t / meff - s.vx * s.wz) +
         g.k_ay_vy * (u.ay_meas - y_ay);
  n.wz = s.wz + p.ts * (f.mz_t / p.jzz) + g.k_wz_wz * (u.wz_meas - y_wz);
  n.dm = s.dm;
  if (std::abs(u.wz_meas) <= g.yaw_gate) {
    const double eps = u.ax_meas >= 0.0 ? 1.0 : -1.0;
    n.dm += g.k_ax_dm * eps * (u.ax_meas - y_ax);
  }
  return n;
}

std::vector<double> BenchResult::dm_series() const {
  std::vector<double> v;
  v.reserve(samples.size());
  for (const BenchSample& s : samples) v.push_back(s.state.dm);
  return v;
}

std::vector<double> BenchResult::beta_series() const {
  std::vector<double> v;
  v.reserve(samples.size());
  for (const BenchSample& s : samples) v.push_back(s.beta);
  return v;
}

BenchResult run_benchmark_estimation(const BenchParams& p, const TruthRun& run,
                                     const BenchGains& g, double init_dm) {
  BenchParams pp = p;
  pp.ts = run.dt;
  pp.validate();
  BenchResult res;
  BenchState s;
  s.vx = run.x0.vx;
  s.vy = run.x0.vy;
  s.wz = run.x0.wz;
  s.dm = init_dm;
  const int n = run.samples();
  res.samples.reserve(n);
  for (int k = 0; k < n; ++k) {
    const MeasurementVec& y = run.meas[k];
    BenchInput u;
    u.steer = run.twin_inputs[k].steer;
    u.wheel_w = {y.wheel(0), y.wheel(1), y.wheel(2), y.wheel(3)};
    u.ax_meas = y.ax();
    u.ay_meas = y.ay();
    u.wz_meas = y.wz();

    const double delta = u.steer / pp.steer_ratio;
    const double meff = pp.mass + s.dm;
    const ForceSums f = total_forces(s, u, delta, pp);
    const double y_ax = f.fx_t / meff + s.vy * s.wz;
    const double y_ay = f.fy_t / meff - s.vx * s.wz;
    const double y_wz = s.wz;

    s = bench_step(s, u, pp, g);

    const bool finite = std::isfinite(s.vx) && std::isfinite(s.vy) &&
                        std::isfinite(s.wz) && std::isfinite(s.dm);
    std::string reason;
    if (!finite) {
      reason = "non-finite state";
    } else if (std::abs(s.vx) > 200.0 || std::abs(s.vy) > 100.0) {
      reason = "velocity out of range";
    } else if (std::abs(s.wz) > 20.0) {
      reason = "yaw rate out of range";
    } else if (pp.mass + s.dm < 100.0 || s.dm > 10000.0) {
      reason = "mass estimate out of range";
    }
    if (!reason.empty()) {
      res.diverged = true;
      res.diverged_at = k;
      res.diverged_reason = reason;
      break;
    }

    BenchSample sample;
    sample.t = k * run.dt;
    sample.state = s;
    sample.beta = std::atan2(s.vy, std::max(std::abs(s.vx), 0.5));
    sample.res_ax = u.ax_meas - y_ax;
    sample.res_ay = u.ay_meas - y_ay;
    sample.res_wz = u.wz_meas - y_wz;
    res.samples.push_back(sample);
  }
  res.final_state = s;
  return res;
}

}  // namespace til
