#include "til/twin.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>

namespace til {
namespace {

constexpr int kNx = 16;  // dynamic state fields (suspension cache excluded)
using Vec = std::array<double, kNx>;

// Dynamic-state packing order.
enum Idx {
  iVx = 0, iVy, iVz, iWx, iWy, iWz, iRoll, iPitch, iHeave,
  iW0, iW1, iW2, iW3, iPx, iPy, iYaw
};

Vec pack(const TwinState& s) {
  return {s.vx, s.vy, s.vz, s.wx, s.wy, s.wz, s.roll, s.pitch, s.heave,
          s.wheel_w[0], s.wheel_w[1], s.wheel_w[2], s.wheel_w[3],
          s.px, s.py, s.yaw};
}

void unpack(const Vec& y, TwinState* s) {
  s->vx = y[iVx]; s->vy = y[iVy]; s->vz = y[iVz];
  s->wx = y[iWx]; s->wy = y[iWy]; s->wz = y[iWz];
  s->roll = y[iRoll]; s->pitch = y[iPitch]; s->heave = y[iHeave];
  for (int i = 0; i < 4; ++i) s->wheel_w[i] = y[iW0 + i];
  s->px = y[iPx]; s->py = y[iPy]; s->yaw = y[iYaw];
}

// Magic-formula shape, normalized to unit peak; caller multiplies by mu*Fz.
double magic_shape(double slip, double b, double c, double e) {
  const double bs = b * slip;
  return std::sin(c * std::atan(bs - e * (bs - std::atan(bs))));
}

struct DerivAux {
  double fx_ext = 0.0;              // tire + resistance forces, body x, N
  double fy_ext = 0.0;              // tire forces, body y, N
  double fz_susp = 0.0;             // total suspension force, N
  std::array<double, 4> defl{};     // corner deflection from trim, m
};

}  // namespace

TwinConfig twin_config_from_config(const ConfigMap& cfg) {
  TwinConfig d;  // defaults
  TwinConfig c;
  c.max_internal_dt = cfg.get_double("twin.max_internal_dt", d.max_internal_dt);
  c.spring_n_per_m = cfg.get_double("twin.spring_n_per_m", d.spring_n_per_m);
  c.damper_ns_per_m = cfg.get_double("twin.damper_ns_per_m", d.damper_ns_per_m);
  c.susp_travel_m = cfg.get_double("twin.susp_travel_m", d.susp_travel_m);
  c.wheel_radius = cfg.get_double("twin.wheel_radius", d.wheel_radius);
  c.wheel_inertia = cfg.get_double("twin.wheel_inertia", d.wheel_inertia);
  c.tire_b = cfg.get_double("twin.tire_b", d.tire_b);
  c.tire_c = cfg.get_double("twin.tire_c", d.tire_c);
  c.tire_mu0 = cfg.get_double("twin.tire_mu0", d.tire_mu0);
  c.tire_e = cfg.get_double("twin.tire_e", d.tire_e);
  c.tire_load_sens = cfg.get_double("twin.tire_load_sens", d.tire_load_sens);
  c.cda = cfg.get_double("twin.cda", d.cda);
  c.air_density = cfg.get_double("twin.air_density", d.air_density);
  c.rolling_coeff = cfg.get_double("twin.rolling_coeff", d.rolling_coeff);
  c.steer_ratio = cfg.get_double("twin.steer_ratio", d.steer_ratio);
  c.max_road_wheel_angle =
      cfg.get_double("twin.max_road_wheel_angle", d.max_road_wheel_angle);
  c.brake_front_share =
      cfg.get_double("twin.brake_front_share", d.brake_front_share);
  c.driveline_visc = cfg.get_double("twin.driveline_visc", d.driveline_visc);
  c.v_slip_floor = cfg.get_double("twin.v_slip_floor", d.v_slip_floor);
  c.gravity = cfg.get_double("twin.gravity", d.gravity);
  c.drag_scale = cfg.get_double("twin.drag_scale", d.drag_scale);
  c.tire_stiffness_scale =
      cfg.get_double("twin.tire_stiffness_scale", d.tire_stiffness_scale);
  c.max_speed = cfg.get_double("twin.max_speed", d.max_speed);
  c.max_wheel_rate = cfg.get_double("twin.max_wheel_rate", d.max_wheel_rate);
  c.max_tilt = cfg.get_double("twin.max_tilt", d.max_tilt);
  return c;
}

TwinSim::TwinSim(const VehicleParams& base, const TwinConfig& cfg)
    : base_(base), eff_(base), cfg_(cfg) {
  validate(base_);
  if (cfg_.max_internal_dt <= 0.0 || cfg_.wheel_radius <= 0.0 ||
      cfg_.wheel_inertia <= 0.0 || cfg_.spring_n_per_m <= 0.0) {
    throw std::invalid_argument("twin: nonphysical simulator configuration");
  }
  fz_ref_ = base_.mass * cfg_.gravity / 4.0;
  refresh_trim();
  refresh_measurement(DriverInput{});
}

void TwinSim::set_param_deviation(const ParamDeviation& d) {
  VehicleParams e = base_;
  e.mass = base_.mass + d.dm;
  e.jxx = base_.jxx + d.djxx;
  e.jyy = base_.jyy + d.djyy;
  e.jzz = base_.jzz + d.djzz;
  validate(e);  // throws std::invalid_argument on a nonphysical result
  eff_ = e;
  dev_ = d;
  refresh_trim();
}

void TwinSim::set_state(const TwinState& s) {
  TwinState saved = st_;
  st_ = s;
  {
    const TwinState& t = st_;
    auto finite = [](double v) { return std::isfinite(v); };
    bool ok = finite(t.vx) && finite(t.vy) && finite(t.vz) && finite(t.wx) &&
              finite(t.wy) && finite(t.wz) && finite(t.roll) &&
              finite(t.pitch) && finite(t.heave) && finite(t.px) &&
              finite(t.py) && finite(t.yaw);
    for (int i = 0; i < 4; ++i)
      ok = ok && finite(t.wheel_w[i]) && finite(t.susp[i]);
    ok = ok && std::abs(t.vx) <= cfg_.max_speed &&
         std::abs(t.vy) <= cfg_.max_speed && std::abs(t.vz) <= cfg_.max_speed;
    for (int i = 0; i < 4; ++i)
      ok = ok && std::abs(t.wheel_w[i]) <= cfg_.max_wheel_rate;
    ok = ok && std::abs(t.roll) <= cfg_.max_tilt &&
         std::abs(t.pitch) <= cfg_.max_tilt && std::abs(t.heave) <= 1.0;
    if (!ok) {
      st_ = saved;
      throw std::invalid_argument("twin: state out of bounds");
    }
  }
  refresh_measurement(DriverInput{});
}

TwinState TwinSim::cruise_state(double v) const {
  TwinState s;
  s.vx = v;
  for (auto& w : s.wheel_w) w = v / cfg_.wheel_radius;
  return s;
}

void TwinSim::refresh_trim() {
  const double lf = eff_.lf, lr = eff_.lr, half_t = eff_.track / 2.0;
  const double dy = eff_.cm.y();
  const double xs[4] = {lf, lf, -lr, -lr};
  const double ys[4] = {half_t - dy, -half_t - dy, half_t - dy, -half_t - dy};
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < 4; ++i) {
    sx += xs[i]; sy += ys[i];
    sxx += xs[i] * xs[i]; syy += ys[i] * ys[i]; sxy += xs[i] * ys[i];
  }
  Eigen::Matrix3d a;
  a << 4.0, sx, sy,
       sx, sxx, sxy,
       sy, sxy, syy;
  Eigen::Vector3d rhs(eff_.mass * cfg_.gravity, 0.0, 0.0);
  Eigen::Vector3d abc = a.fullPivLu().solve(rhs);
  for (int i = 0; i < 4; ++i) {
    trim_load_[i] = abc[0] + abc[1] * xs[i] + abc[2] * ys[i];
    if (!(trim_load_[i] > 0.0)) {
      throw std::invalid_argument("twin: static trim has a non-positive corner load");
    }
  }
}

namespace {

struct DynContext {
  const VehicleParams* p;
  const TwinConfig* c;
  const std::array<double, 4>* trim;
  double fz_ref;
};

void eval_dynamics(const DynContext& cx, const Vec& y, const DriverInput& u,
                   Vec& dy, DerivAux* aux) {
  const VehicleParams& p = *cx.p;
  const TwinConfig& c = *cx.c;
  const double m = p.mass, g = c.gravity;
  const double lf = p.lf, lr = p.lr, half_t = p.track / 2.0;
  const double dyoff = p.cm.y(), dz = p.cm.z();
  const double xs[4] = {lf, lf, -lr, -lr};
  const double ys[4] = {half_t - dyoff, -half_t - dyoff, half_t - dyoff,
                        -half_t - dyoff};
  const double road[4] = {u.road_z_front, u.road_z_front, u.road_z_rear,
                          u.road_z_rear};

  const double steer_w = std::clamp(u.steer / c.steer_ratio,
                                    -c.max_road_wheel_angle,
                                    c.max_road_wheel_angle);
  const double cs = std::cos(steer_w), sn = std::sin(steer_w);
  const double brake = std::max(0.0, u.brake_torque);
  const double t_drive[4] = {0.0, 0.0, u.drive_torque / 2.0,
                             u.drive_torque / 2.0};
  const double t_brake[4] = {brake * c.brake_front_share / 2.0,
                             brake * c.brake_front_share / 2.0,
                             brake * (1.0 - c.brake_front_share) / 2.0,
                             brake * (1.0 - c.brake_front_share) / 2.0};

  const double vx = y[iVx], vy = y[iVy], vz = y[iVz];
  const double wx = y[iWx], wy = y[iWy], wz = y[iWz];
  const double roll = y[iRoll], pitch = y[iPitch], heave = y[iHeave];

  const double b_eff = c.tire_b * c.tire_stiffness_scale;

  double sum_fx = 0, sum_fy = 0, sum_fsusp = 0;
  double mx = 0, my = 0, mz = 0;
  std::array<double, 4> defl{};
  double fxw_wheel[4];  // wheel-frame longitudinal tire force, for spin dynamics

  for (int i = 0; i < 4; ++i) {
    // Suspension deflection from static trim (compression positive).
    const double s = -heave + xs[i] * pitch - ys[i] * roll + road[i];
    const double sr = -vz + xs[i] * wy - ys[i] * wx;
    defl[i] = s;
    double fsusp = (*cx.trim)[i] + c.spring_n_per_m * s + c.damper_ns_per_m * sr;
    if (s > c.susp_travel_m) {
      fsusp += 10.0 * c.spring_n_per_m * (s - c.susp_travel_m);  // bump stop
    }
    fsusp = std::max(0.0, fsusp);  // wheel lift-off
    sum_fsusp += fsusp;
    mx += ys[i] * fsusp;
    my -= xs[i] * fsusp;

    // Tire contact-patch velocity in the body frame.
    const double vcx = vx + wy * (-dz) - wz * ys[i];
    const double vcy = vy + wz * xs[i] + wx * dz;
    const bool front = i < 2;
    const double cw = front ? cs : 1.0;
    const double sw = front ? sn : 0.0;
    const double vwx = cw * vcx + sw * vcy;
    const double vwy = -sw * vcx + cw * vcy;

    const double omega = y[iW0 + i];
    const double r_omega = c.wheel_radius * omega;
    const double den = std::max({std::abs(r_omega), std::abs(vwx),
                                 c.v_slip_floor});
    const double slip = (r_omega - vwx) / den;
    const double alpha = std::atan2(-vwy, den);

    const double fz = fsusp;
    double mu = c.tire_mu0 * (1.0 - c.tire_load_sens * (fz / cx.fz_ref - 1.0));
    mu = std::max(mu, 0.2 * c.tire_mu0);

    double fxw = mu * fz * magic_shape(slip, b_eff, c.tire_c, c.tire_e);
    double fyw = mu * fz * magic_shape(alpha, b_eff, c.tire_c, c.tire_e);
    const double cap = mu * fz;
    const double fm = std::hypot(fxw, fyw);
    if (fm > cap && fm > 0.0) {
      const double k = cap / fm;
      fxw *= k;
      fyw *= k;
    }
    fxw_wheel[i] = fxw;

    const double fxb = cw * fxw - sw * fyw;
    const double fyb = sw * fxw + cw * fyw;
    sum_fx += fxb;
    sum_fy += fyb;
    mz += xs[i] * fyb - ys[i] * fxb;
    mx += dz * fyb;
    my -= dz * fxb;
  }

  const double drag =
      0.5 * c.air_density * c.cda * c.drag_scale * vx * std::abs(vx);
  const double rolling = c.rolling_coeff * m * g * std::tanh(vx / 0.3);
  const double fx_ext = sum_fx - drag - rolling;

  const double sin_th = std::sin(pitch), cos_th = std::cos(pitch);
  const double sin_ph = std::sin(roll), cos_ph = std::cos(roll);
  const double fx_tot = fx_ext + m * g * sin_th;
  const double fy_tot = sum_fy - m * g * sin_ph * cos_th;
  const double fz_tot = sum_fsusp - m * g * cos_ph * cos_th;

  dy[iVx] = fx_tot / m - (wy * vz - wz * vy);
  dy[iVy] = fy_tot / m - (wz * vx - wx * vz);
  dy[iVz] = fz_tot / m - (wx * vy - wy * vx);
  dy[iWx] = (mx - (p.jzz - p.jyy) * wy * wz) / p.jxx;
  dy[iWy] = (my - (p.jxx - p.jzz) * wz * wx) / p.jyy;
  dy[iWz] = (mz - (p.jyy - p.jxx) * wx * wy) / p.jzz;
  dy[iRoll] = wx;
  dy[iPitch] = wy;
  dy[iHeave] = vz;
  for (int i = 0; i < 4; ++i) {
    const double omega = y[iW0 + i];
    dy[iW0 + i] = (t_drive[i] - std::tanh(omega / 0.5) * t_brake[i] -
                   c.driveline_visc * omega -
                   c.wheel_radius * fxw_wheel[i]) /
                  c.wheel_inertia;
  }
  const double cy = std::cos(y[iYaw]), sy2 = std::sin(y[iYaw]);
  dy[iPx] = vx * cy - vy * sy2;
  dy[iPy] = vx * sy2 + vy * cy;
  dy[iYaw] = wz;

  if (aux) {
    aux->fx_ext = fx_ext;
    aux->fy_ext = sum_fy;
    aux->fz_susp = sum_fsusp;
    aux->defl = defl;
  }
}

}  // namespace

void TwinSim::step(const DriverInput& u, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("twin: step dt must be positive and finite");
  }
  if (!std::isfinite(u.steer) || !std::isfinite(u.drive_torque) ||
      !std::isfinite(u.brake_torque) || !std::isfinite(u.road_z_front) ||
      !std::isfinite(u.road_z_rear)) {
    throw std::invalid_argument("twin: non-finite driver input");
  }
  const int n = std::max(1, static_cast<int>(
                                std::ceil(dt / cfg_.max_internal_dt - 1e-12)));
  const double h = dt / n;

  DynContext cx{&eff_, &cfg_, &trim_load_, fz_ref_};
  Vec y = pack(st_);
  Vec k1, k2, k3, k4, tmp;
  for (int step_i = 0; step_i < n; ++step_i) {
    eval_dynamics(cx, y, u, k1, nullptr);
    for (int j = 0; j < kNx; ++j) tmp[j] = y[j] + 0.5 * h * k1[j];
    eval_dynamics(cx, tmp, u, k2, nullptr);
    for (int j = 0; j < kNx; ++j) tmp[j] = y[j] + 0.5 * h * k2[j];
    eval_dynamics(cx, tmp, u, k3, nullptr);
    for (int j = 0; j < kNx; ++j) tmp[j] = y[j] + h * k3[j];
    eval_dynamics(cx, tmp, u, k4, nullptr);
    for (int j = 0; j < kNx; ++j) {
      y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
  }
  unpack(y, &st_);
  refresh_measurement(u);

  // Divergence guards.
  bool bad = false;
  for (int j = 0; j < kNx; ++j) bad = bad || !std::isfinite(y[j]);
  bad = bad || std::abs(st_.vx) > cfg_.max_speed ||
        std::abs(st_.vy) > cfg_.max_speed || std::abs(st_.vz) > cfg_.max_speed;
  for (int i = 0; i < 4; ++i)
    bad = bad || std::abs(st_.wheel_w[i]) > cfg_.max_wheel_rate;
  bad = bad || std::abs(st_.roll) > cfg_.max_tilt ||
        std::abs(st_.pitch) > cfg_.max_tilt || std::abs(st_.heave) > 1.0;
  if (bad) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "twin: state diverged (vx=%.3g vy=%.3g wz=%.3g roll=%.3g "
                  "pitch=%.3g heave=%.3g)",
                  st_.vx, st_.vy, st_.wz, st_.roll, st_.pitch, st_.heave);
    throw DivergenceError(buf);
  }
}

void TwinSim::refresh_measurement(const DriverInput& u) {
  DynContext cx{&eff_, &cfg_, &trim_load_, fz_ref_};
  Vec y = pack(st_);
  Vec dy;
  DerivAux aux;
  eval_dynamics(cx, y, u, dy, &aux);
  st_.susp = aux.defl;
  meas_.v[0] = dy[iVx] + (y[iWy] * y[iVz] - y[iWz] * y[iVy]);
  meas_.v[1] = dy[iVy] + (y[iWz] * y[iVx] - y[iWx] * y[iVz]);
  meas_.v[2] = aux.fz_susp / eff_.mass;
  meas_.v[3] = y[iWx];
  meas_.v[4] = y[iWy];
  meas_.v[5] = y[iWz];
  for (int i = 0; i < 4; ++i) meas_.v[6 + i] = y[iW0 + i];
}

void TwinSim::inject(const std::array<double, kNumCorrectable>& delta) {
  for (double d : delta) {
    if (!std::isfinite(d)) {
      throw std::invalid_argument("twin: non-finite state correction");
    }
  }
  TwinState saved = st_;
  st_.vx += delta[static_cast<int>(Correctable::kVx)];
  st_.vy += delta[static_cast<int>(Correctable::kVy)];
  st_.wy += delta[static_cast<int>(Correctable::kPitchRate)];
  st_.wz += delta[static_cast<int>(Correctable::kYawRate)];
  for (int i = 0; i < 4; ++i) {
    st_.wheel_w[i] += delta[static_cast<int>(Correctable::kWheelFL) + i];
  }
  bool ok = std::abs(st_.vx) <= cfg_.max_speed &&
            std::abs(st_.vy) <= cfg_.max_speed;
  for (int i = 0; i < 4; ++i)
    ok = ok && std::abs(st_.wheel_w[i]) <= cfg_.max_wheel_rate;
  ok = ok && std::isfinite(st_.wy) && std::isfinite(st_.wz);
  if (!ok) {
    st_ = saved;
    throw std::invalid_argument("twin: state correction out of bounds");
  }
}

}  // namespace til
