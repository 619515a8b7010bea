#include "til/rigid_body.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace til {

void validate(const VehicleParams& p) {
  if (!(p.mass > 0.0)) throw std::invalid_argument("vehicle mass must be positive");
  if (!(p.jxx > 0.0) || !(p.jyy > 0.0) || !(p.jzz > 0.0))
    throw std::invalid_argument("principal moments of inertia must be positive");
  if (!(p.wheelbase > 0.0) || !(p.track > 0.0))
    throw std::invalid_argument("wheelbase and track must be positive");
  if (std::fabs(p.lf + p.lr - p.wheelbase) > 1e-9 * p.wheelbase)
    throw std::invalid_argument("axle distances must satisfy lf + lr = wheelbase");
  if (!(p.lf > 0.0) || !(p.lr > 0.0))
    throw std::invalid_argument("CM must lie between the axles");
}

double total_mass(double base_mass, const LoadConfig& loads) {
  double m = base_mass;
  for (const auto& l : loads) m += l.mass;
  return m;
}

Eigen::Vector3d combined_cm(double base_mass, const Eigen::Vector3d& base_cm,
                            const LoadConfig& loads) {
  const double m = total_mass(base_mass, loads);
  if (!(m > 0.0)) throw std::invalid_argument("combined mass must be positive");
  Eigen::Vector3d weighted = base_mass * base_cm;
  for (const auto& l : loads) {
    if (l.mass < 0.0) throw std::invalid_argument("load mass must be non-negative");
    weighted += l.mass * l.pos;
  }
  return weighted / m;
}

namespace {

// Squared perpendicular distances of `r` from axes through the origin.
inline Eigen::Vector3d perp_sq(const Eigen::Vector3d& r) {
  return {r.y() * r.y() + r.z() * r.z(),   // about x
          r.x() * r.x() + r.z() * r.z(),   // about y
          r.x() * r.x() + r.y() * r.y()};  // about z
}

}  // namespace

Eigen::Vector3d combined_inertia(double base_mass, const Eigen::Vector3d& base_cm,
                                 const Eigen::Vector3d& base_j_diag, const LoadConfig& loads) {
  const Eigen::Vector3d cm = combined_cm(base_mass, base_cm, loads);
  Eigen::Vector3d j = base_j_diag + base_mass * perp_sq(base_cm - cm);
  for (const auto& l : loads) j += l.mass * perp_sq(l.pos - cm);
  return j;
}

VehicleParams combine_params(const VehicleParams& base, const LoadConfig& loads) {
  validate(base);
  VehicleParams out = base;
  out.mass = total_mass(base.mass, loads);
  out.cm = combined_cm(base.mass, base.cm, loads);
  const Eigen::Vector3d j =
      combined_inertia(base.mass, base.cm, {base.jxx, base.jyy, base.jzz}, loads);
  out.jxx = j.x();
  out.jyy = j.y();
  out.jzz = j.z();
  out.lf = -out.cm.x();
  out.lr = out.wheelbase + out.cm.x();
  validate(out);
  return out;
}

VehicleParams vehicle_params_from_config(const ConfigMap& cfg) {
  VehicleParams p;
  p.mass = cfg.get_double("vehicle.mass");
  p.jxx = cfg.get_double("vehicle.jxx");
  p.jyy = cfg.get_double("vehicle.jyy");
  p.jzz = cfg.get_double("vehicle.jzz");
  p.jxy = cfg.get_double("vehicle.jxy", 0.0);
  p.jxz = cfg.get_double("vehicle.jxz", 0.0);
  p.jyz = cfg.get_double("vehicle.jyz", 0.0);
  p.cm = {cfg.get_double("vehicle.cm_x"), cfg.get_double("vehicle.cm_y"),
          cfg.get_double("vehicle.cm_z")};
  p.wheelbase = cfg.get_double("vehicle.wheelbase");
  p.track = cfg.get_double("vehicle.track");
  p.lf = -p.cm.x();
  p.lr = p.wheelbase + p.cm.x();
  validate(p);
  return p;
}

LoadConfig loads_from_config(const ConfigMap& cfg) {
  LoadConfig loads;
  for (long i = 0;; ++i) {
    const std::string base = "loads." + std::to_string(i) + ".";
    if (!cfg.has(base + "mass")) break;
    PointMass pm;
    pm.mass = cfg.get_double(base + "mass");
    pm.pos = {cfg.get_double(base + "x"), cfg.get_double(base + "y"),
              cfg.get_double(base + "z")};
    if (pm.mass < 0.0) throw ConfigError("load mass must be non-negative: " + base + "mass");
    loads.push_back(pm);
  }
  return loads;
}

}  // namespace til
