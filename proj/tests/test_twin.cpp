#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "til/config.hpp"
#include "til/twin.hpp"
#include "test_util.hpp"

using namespace til;
using til_test::config_path;

namespace {

VehicleParams default_vehicle() {
  ConfigMap cfg = ConfigMap::parse_file(config_path("vehicle_default.cfg"));
  return vehicle_params_from_config(cfg);
}

TwinConfig default_twin_config() {
  ConfigMap cfg = ConfigMap::parse_file(config_path("vehicle_default.cfg"));
  return twin_config_from_config(cfg);
}

// Rough feedforward drive torque that balances drag + rolling at speed v.
double cruise_torque(const TwinConfig& c, double mass, double v) {
  double drag = 0.5 * c.air_density * c.cda * v * v;
  double roll = c.rolling_coeff * mass * c.gravity;
  return (drag + roll) * c.wheel_radius;
}

}  // namespace

TEST_CASE("standstill is an exact equilibrium") {
  TwinSim sim(default_vehicle(), default_twin_config());
  for (int i = 0; i < 200; ++i) sim.step(DriverInput{}, 0.01);
  const TwinState& s = sim.state();
  CHECK(std::abs(s.vx) < 1e-9);
  CHECK(std::abs(s.vy) < 1e-9);
  CHECK(std::abs(s.vz) < 1e-9);
  CHECK(std::abs(s.wx) < 1e-9);
  CHECK(std::abs(s.wy) < 1e-9);
  CHECK(std::abs(s.wz) < 1e-9);
  CHECK(std::abs(s.roll) < 1e-9);
  CHECK(std::abs(s.pitch) < 1e-9);
  CHECK(std::abs(s.heave) < 1e-9);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(s.wheel_w[i]) < 1e-9);
}

TEST_CASE("at-rest readout: zero planar acceleration, gravity on the vertical axis") {
  TwinConfig tc = default_twin_config();
  TwinSim sim(default_vehicle(), tc);
  const MeasurementVec& m = sim.readout();
  CHECK(std::abs(m.ax()) < 1e-9);
  CHECK(std::abs(m.ay()) < 1e-9);
  CHECK(m.az() == doctest::Approx(tc.gravity).epsilon(1e-9));
  CHECK(std::abs(m.wx()) < 1e-12);
  CHECK(std::abs(m.wy()) < 1e-12);
  CHECK(std::abs(m.wz()) < 1e-12);
  for (int i = 0; i < 4; ++i) CHECK(m.wheel(i) == 0.0);
}

TEST_CASE("added mass lowers acceleration under the same drive torque") {
  VehicleParams veh = default_vehicle();
  TwinConfig tc = default_twin_config();
  TwinSim light(veh, tc), heavy(veh, tc);
  heavy.set_param_deviation({355.0, 0.0, 0.0, 0.0});
  light.set_state(light.cruise_state(15.0));
  heavy.set_state(heavy.cruise_state(15.0));
  DriverInput u;
  u.drive_torque = 900.0;
  for (int i = 0; i < 200; ++i) {
    light.step(u, 0.01);
    heavy.step(u, 0.01);
  }
  CHECK(light.state().vx > heavy.state().vx + 0.05);
  CHECK(heavy.state().vx > 15.0);  // still accelerating, just less
}

TEST_CASE("steady circle: lateral acceleration matches speed times yaw rate") {
  VehicleParams veh = default_vehicle();
  TwinConfig tc = default_twin_config();
  TwinSim sim(veh, tc);
  sim.set_state(sim.cruise_state(15.0));
  const double v_ref = 15.0;
  const double ff = cruise_torque(tc, veh.mass, v_ref);
  double sum_ay = 0.0, sum_vxwz = 0.0, sum_absay = 0.0;
  int count = 0;
  for (int i = 0; i < 2500; ++i) {
    DriverInput u;
    u.steer = 0.75;  // steering wheel angle, rad
    u.drive_torque = std::clamp(ff + 2000.0 * (v_ref - sim.state().vx),
                                -2000.0, 2500.0);
    sim.step(u, 0.01);
    if (i >= 2200) {
      const MeasurementVec& m = sim.readout();
      sum_ay += m.ay();
      sum_vxwz += sim.state().vx * sim.state().wz;
      sum_absay += std::abs(m.ay());
      ++count;
    }
  }
  const double mean_ay = sum_ay / count;
  const double mean_vxwz = sum_vxwz / count;
  const double mean_mag = sum_absay / count;
  REQUIRE(mean_mag > 1.0);  // a real turn, not a numerical whisper
  CHECK(std::abs(mean_ay - mean_vxwz) < 0.02 * mean_mag);
  // Left turn: positive yaw rate, body rolls toward the outside (right).
  CHECK(sim.state().wz > 0.05);
  CHECK(sim.state().roll > 1e-4);
  CHECK(std::abs(sim.state().vy) < 1.5);
}

TEST_CASE("halving the integrator substep barely changes a transient") {
  VehicleParams veh = default_vehicle();
  TwinConfig coarse = default_twin_config();
  TwinConfig fine = coarse;
  fine.max_internal_dt = coarse.max_internal_dt / 2.0;
  TwinSim a(veh, coarse), b(veh, fine);
  a.set_state(a.cruise_state(20.0));
  b.set_state(b.cruise_state(20.0));
  for (int i = 0; i < 150; ++i) {
    DriverInput u;
    double t = i * 0.01;
    u.steer = 0.4 * std::sin(2.0 * M_PI * 0.8 * t);
    u.drive_torque = (t < 0.7) ? 700.0 : 0.0;
    u.brake_torque = (t >= 0.7) ? 900.0 : 0.0;
    a.step(u, 0.01);
    b.step(u, 0.01);
  }
  auto close = [](double x, double y) {
    return std::abs(x - y) <= 1e-3 * std::max({std::abs(x), std::abs(y), 0.01});
  };
  CHECK(close(a.state().vx, b.state().vx));
  CHECK(close(a.state().vy, b.state().vy));
  CHECK(close(a.state().wz, b.state().wz));
  CHECK(close(a.state().roll, b.state().roll));
  CHECK(close(a.state().pitch, b.state().pitch));
}

TEST_CASE("state corrections apply with unit gain and touch nothing else") {
  TwinSim sim(default_vehicle(), default_twin_config());
  sim.set_state(sim.cruise_state(12.0));
  TwinState before = sim.state();
  std::array<double, kNumCorrectable> delta{};
  delta[static_cast<int>(Correctable::kVx)] = 0.25;
  delta[static_cast<int>(Correctable::kYawRate)] = -0.03;
  delta[static_cast<int>(Correctable::kWheelRL)] = 0.5;
  sim.inject(delta);
  const TwinState& after = sim.state();
  CHECK(after.vx == before.vx + 0.25);
  CHECK(after.wz == before.wz - 0.03);
  CHECK(after.wheel_w[2] == before.wheel_w[2] + 0.5);
  // Untouched channels are bitwise identical.
  CHECK(after.vy == before.vy);
  CHECK(after.vz == before.vz);
  CHECK(after.wx == before.wx);
  CHECK(after.wy == before.wy);
  CHECK(after.roll == before.roll);
  CHECK(after.pitch == before.pitch);
  CHECK(after.heave == before.heave);
  CHECK(after.wheel_w[0] == before.wheel_w[0]);
  CHECK(after.wheel_w[1] == before.wheel_w[1]);
  CHECK(after.wheel_w[3] == before.wheel_w[3]);
  CHECK(after.px == before.px);
  CHECK(after.py == before.py);
  CHECK(after.yaw == before.yaw);
}

TEST_CASE("state corrections reject garbage") {
  TwinSim sim(default_vehicle(), default_twin_config());
  TwinState before = sim.state();
  std::array<double, kNumCorrectable> nan_delta{};
  nan_delta[0] = std::nan("");
  CHECK_THROWS_AS(sim.inject(nan_delta), std::invalid_argument);
  std::array<double, kNumCorrectable> huge{};
  huge[static_cast<int>(Correctable::kVx)] = 1e4;
  CHECK_THROWS_AS(sim.inject(huge), std::invalid_argument);
  CHECK(sim.state().vx == before.vx);  // rejected correction left no trace
}

TEST_CASE("parameter deviations add exactly and validate") {
  VehicleParams veh = default_vehicle();
  TwinSim sim(veh, default_twin_config());
  sim.set_param_deviation({0.0, 0.0, 0.0, 0.0});
  CHECK(sim.params().mass == veh.mass);
  CHECK(sim.params().jzz == veh.jzz);
  sim.set_param_deviation({355.0, 0.0, 0.0, 0.0});
  CHECK(sim.params().mass == 2480.8);
  sim.set_param_deviation({355.0, 67.7, 754.2, 827.2});
  CHECK(sim.params().jxx == doctest::Approx(901.93).epsilon(1e-12));
  CHECK_THROWS_AS(sim.set_param_deviation({-5000.0, 0.0, 0.0, 0.0}),
                  std::invalid_argument);
  // Failed update leaves the previous deviation in force.
  CHECK(sim.params().mass == 2480.8);
}

TEST_CASE("identical runs are bitwise identical") {
  VehicleParams veh = default_vehicle();
  TwinConfig tc = default_twin_config();
  TwinSim a(veh, tc), b(veh, tc);
  a.set_state(a.cruise_state(18.0));
  b.set_state(b.cruise_state(18.0));
  for (int i = 0; i < 300; ++i) {
    DriverInput u;
    double t = i * 0.01;
    u.steer = 0.5 * std::sin(2.0 * M_PI * 0.5 * t);
    u.drive_torque = 400.0 + 200.0 * std::sin(2.0 * M_PI * 0.2 * t);
    u.road_z_front = 0.01 * std::sin(2.0 * M_PI * 1.3 * t);
    u.road_z_rear = 0.01 * std::sin(2.0 * M_PI * 1.3 * (t - 0.14));
    a.step(u, 0.01);
    b.step(u, 0.01);
  }
  CHECK(a.state().vx == b.state().vx);
  CHECK(a.state().vy == b.state().vy);
  CHECK(a.state().wz == b.state().wz);
  CHECK(a.state().px == b.state().px);
  CHECK(a.state().py == b.state().py);
  CHECK(a.readout().ax() == b.readout().ax());
  CHECK(a.readout().ay() == b.readout().ay());
}

TEST_CASE("absurd drive torque trips the divergence guard") {
  TwinSim sim(default_vehicle(), default_twin_config());
  sim.set_state(sim.cruise_state(30.0));
  DriverInput u;
  u.drive_torque = 8.0e4;
  bool threw = false;
  try {
    for (int i = 0; i < 2000; ++i) sim.step(u, 0.01);
  } catch (const DivergenceError&) {
    threw = true;
  }
  CHECK(threw);
}

TEST_CASE("step input validation") {
  TwinSim sim(default_vehicle(), default_twin_config());
  CHECK_THROWS_AS(sim.step(DriverInput{}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sim.step(DriverInput{}, -0.01), std::invalid_argument);
  DriverInput bad;
  bad.steer = std::nan("");
  CHECK_THROWS_AS(sim.step(bad, 0.01), std::invalid_argument);
  TwinState tilted;
  tilted.roll = 2.0;
  CHECK_THROWS_AS(sim.set_state(tilted), std::invalid_argument);
}

TEST_CASE("braking from cruise: nose dives, vehicle stops and stays") {
  TwinSim sim(default_vehicle(), default_twin_config());
  sim.set_state(sim.cruise_state(20.0));
  DriverInput u;
  u.brake_torque = 2400.0;
  double dive = 0.0;
  for (int i = 0; i < 120; ++i) {
    sim.step(u, 0.01);
    dive = std::max(dive, sim.state().pitch);
  }
  CHECK(dive > 5e-3);  // nose-down pitch while decelerating
  CHECK(sim.state().vx < 20.0 - 2.0);
  for (int i = 0; i < 1500; ++i) sim.step(u, 0.01);
  CHECK(std::abs(sim.state().vx) < 0.2);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(sim.state().wheel_w[i]) < 1.0);
}

TEST_CASE("front road bump lifts the nose") {
  TwinSim sim(default_vehicle(), default_twin_config());
  DriverInput u;
  u.road_z_front = 0.05;
  for (int i = 0; i < 100; ++i) sim.step(u, 0.01);
  CHECK(sim.state().pitch < -1e-3);  // pitch > 0 means nose down
  CHECK(sim.state().heave > 1e-3);   // body rides higher overall
}

TEST_CASE("wheel-speed channels in the readout mirror the state") {
  TwinSim sim(default_vehicle(), default_twin_config());
  sim.set_state(sim.cruise_state(10.0));
  DriverInput u;
  u.drive_torque = 500.0;
  sim.step(u, 0.01);
  for (int i = 0; i < 4; ++i) {
    CHECK(sim.readout().wheel(i) == sim.state().wheel_w[i]);
  }
}
