#pragma once

#include <Eigen/Core>
#include <vector>

#include "til/config.hpp"

namespace til {

// Body frame: origin at the front axle center on the ground plane,
// x forward, y left, z up. The nominal CM therefore has negative x.
struct PointMass {
  double mass = 0.0;          // kg
  Eigen::Vector3d pos{0, 0, 0};  // m, body frame
};

using LoadConfig = std::vector<PointMass>;

struct VehicleParams {
  double mass = 0.0;  // kg
  double jxx = 0.0, jyy = 0.0, jzz = 0.0;  // kg m^2, about the CM
  double jxy = 0.0, jxz = 0.0, jyz = 0.0;  // products of inertia, carried through
  Eigen::Vector3d cm{0, 0, 0};             // m, body frame
  double wheelbase = 0.0, track = 0.0;     // m
  double lf = 0.0, lr = 0.0;               // m, CM to front/rear axle, lf + lr = wheelbase
};

// Throws std::invalid_argument when mass/inertia are non-positive or the
// axle split disagrees with the wheelbase.
void validate(const VehicleParams& p);

double total_mass(double base_mass, const LoadConfig& loads);

// Mass-weighted mean of the base CM and the load positions.
Eigen::Vector3d combined_cm(double base_mass, const Eigen::Vector3d& base_cm,
                            const LoadConfig& loads);

// Principal moments about the combined CM: base inertia is transported from
// the base CM by the parallel-axis theorem and each load contributes
// m * (perpendicular distance)^2 per axis. Products of inertia pass through.
// Returns (jxx, jyy, jzz).
Eigen::Vector3d combined_inertia(double base_mass, const Eigen::Vector3d& base_cm,
                                 const Eigen::Vector3d& base_j_diag, const LoadConfig& loads);

// Full loaded-vehicle parameter set: mass, CM, inertia, and the axle split
// recomputed from the shifted CM (wheelbase and track are unchanged).
VehicleParams combine_params(const VehicleParams& base, const LoadConfig& loads);

// Config I/O. Vehicle keys live under "vehicle.", loads under "loads.<i>.".
VehicleParams vehicle_params_from_config(const ConfigMap& cfg);
LoadConfig loads_from_config(const ConfigMap& cfg);

}  // namespace til
