#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "til/benchmark.hpp"
#include "til/config.hpp"
#include "til/observer.hpp"
#include "til/rigid_body.hpp"
#include "til/scenario.hpp"
#include "til/tuner.hpp"
#include "til/twin.hpp"
#include "test_util.hpp"

using namespace til;
using til_test::config_path;

namespace {

BOConfig box2d(int n_total, int n_seed, uint64_t seed) {
  BOConfig c;
  c.n_total = n_total;
  c.n_seed = n_seed;
  c.lo = {-2.0, -1.0};
  c.hi = {3.0, 4.0};
  c.seed = seed;
  return c;
}

Objective quadratic(double cx, double cy) {
  return [=](const std::vector<double>& t) {
    ObjectiveResult r;
    r.j = (t[0] - cx) * (t[0] - cx) + (t[1] - cy) * (t[1] - cy);
    return r;
  };
}

}  // namespace

// ---------------------------------------------------------------------------
// Low-discrepancy candidates
// ---------------------------------------------------------------------------

TEST_CASE("sobol sequence starts at the origin then the box center") {
  SobolSeq seq(3);
  std::vector<double> p0 = seq.next();
  for (double v : p0) CHECK(v == 0.0);
  std::vector<double> p1 = seq.next();
  for (double v : p1) CHECK(v == 0.5);
}

TEST_CASE("sobol points fill every axis bin exactly evenly") {
  const int dim = 5, n = 256, bins = 16;
  SobolSeq seq(dim);
  std::vector<std::vector<int>> count(dim, std::vector<int>(bins, 0));
  for (int k = 0; k < n; ++k) {
    std::vector<double> p = seq.next();
    for (int d = 0; d < dim; ++d) {
      CHECK(p[d] >= 0.0);
      CHECK(p[d] < 1.0);
      ++count[d][std::min(bins - 1, (int)(p[d] * bins))];
    }
  }
  for (int d = 0; d < dim; ++d) {
    for (int b = 0; b < bins; ++b) CHECK(count[d][b] == n / bins);
  }
}

TEST_CASE("sobol sequence is deterministic") {
  SobolSeq a(4), b(4);
  for (int k = 0; k < 50; ++k) {
    std::vector<double> pa = a.next(), pb = b.next();
    for (int d = 0; d < 4; ++d) CHECK(pa[d] == pb[d]);
  }
}

// ---------------------------------------------------------------------------
// Core loop behavior
// ---------------------------------------------------------------------------

TEST_CASE("quadratic optimum is found within five percent of the box diagonal") {
  const double cx = 1.3, cy = 0.7;
  const double diag = std::hypot(5.0, 5.0);
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    BOResult r = bo_minimize(quadratic(cx, cy), box2d(40, 8, seed));
    const double dist = std::hypot(r.best_evaluated[0] - cx,
                                   r.best_evaluated[1] - cy);
    CHECK(dist <= 0.05 * diag);
    CHECK((int)r.history.size() == 40);
  }
}

TEST_CASE("degenerate budget reduces to pure random search") {
  Objective f = quadratic(0.0, 0.0);
  BOConfig c = box2d(12, 12, 5);
  BOResult r = bo_minimize(f, c);
  REQUIRE((int)r.history.size() == 12);
  double jmin = std::numeric_limits<double>::infinity();
  for (const EvalRecord& e : r.history) jmin = std::min(jmin, e.j);
  CHECK(r.best_evaluated_j == jmin);
}

TEST_CASE("constant objective stays valid with a flat surrogate") {
  Objective f = [](const std::vector<double>&) {
    ObjectiveResult r;
    r.j = 3.7;
    return r;
  };
  BOConfig c = box2d(18, 6, 9);
  BOResult r = bo_minimize(f, c);
  CHECK(r.best_evaluated_j == 3.7);
  for (int d = 0; d < 2; ++d) {
    CHECK(r.best_evaluated[d] >= c.lo[d]);
    CHECK(r.best_evaluated[d] <= c.hi[d]);
  }
  // Surrogate mean is flat at the constant value.
  SobolSeq seq(2);
  seq.next();
  for (int k = 0; k < 20; ++k) {
    std::vector<double> p = seq.next();
    std::vector<double> t = {c.lo[0] + p[0] * (c.hi[0] - c.lo[0]),
                             c.lo[1] + p[1] * (c.hi[1] - c.lo[1])};
    CHECK(r.final_mean(t) == doctest::Approx(3.7).epsilon(1e-9));
  }
}

TEST_CASE("exactly the configured number of evaluations, all inside the box") {
  int calls = 0;
  Objective f = [&](const std::vector<double>& t) {
    ++calls;
    ObjectiveResult r;
    r.j = t[0] * t[0] + std::cos(t[1]) + t[2];
    return r;
  };
  BOConfig c;
  c.n_total = 23;
  c.n_seed = 7;
  c.lo = {-3.0, 2.0, 0.5};
  c.hi = {-1.0, 8.0, 0.6};
  c.seed = 11;
  BOResult r = bo_minimize(f, c);
  CHECK(calls == 23);
  REQUIRE((int)r.history.size() == 23);
  for (const EvalRecord& e : r.history) {
    REQUIRE((int)e.theta.size() == 3);
    for (int d = 0; d < 3; ++d) {
      CHECK(e.theta[d] >= c.lo[d]);
      CHECK(e.theta[d] <= c.hi[d]);
    }
  }
  for (int d = 0; d < 3; ++d) {
    CHECK(r.best_predicted[d] >= c.lo[d]);
    CHECK(r.best_predicted[d] <= c.hi[d]);
  }
}

TEST_CASE("fixed seed reproduces the identical evaluation sequence") {
  BOResult a = bo_minimize(quadratic(1.0, 1.0), box2d(20, 6, 42));
  BOResult b = bo_minimize(quadratic(1.0, 1.0), box2d(20, 6, 42));
  REQUIRE(a.history.size() == b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].j == b.history[i].j);
    for (int d = 0; d < 2; ++d) {
      CHECK(a.history[i].theta[d] == b.history[i].theta[d]);
    }
  }
  BOResult c = bo_minimize(quadratic(1.0, 1.0), box2d(20, 6, 43));
  bool differs = false;
  for (size_t i = 0; i < c.history.size() && !differs; ++i) {
    differs = c.history[i].theta[0] != a.history[i].theta[0];
  }
  CHECK(differs);
}

TEST_CASE("the incumbent is the running minimum of the history") {
  BOResult r = bo_minimize(quadratic(-0.5, 2.0), box2d(30, 8, 17));
  double run_min = std::numeric_limits<double>::infinity();
  for (const EvalRecord& e : r.history) {
    if (!e.diverged) run_min = std::min(run_min, e.j);
  }
  CHECK(r.best_evaluated_j == run_min);
  CHECK(r.best_evaluated_j <= r.history.front().j);
}

TEST_CASE("an all-divergent seed phase raises an error advising wider bounds") {
  Objective f = [](const std::vector<double>&) {
    ObjectiveResult r;
    r.diverged = true;
    r.j = std::numeric_limits<double>::infinity();
    return r;
  };
  bool threw = false;
  try {
    bo_minimize(f, box2d(20, 6, 1));
  } catch (const std::runtime_error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("bound") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("partial divergence is recorded and the loop continues") {
  // Left half of the box diverges; right half is a smooth bowl.
  Objective f = [](const std::vector<double>& t) {
    ObjectiveResult r;
    if (t[0] < 0.5) {
      r.diverged = true;
      r.j = std::numeric_limits<double>::infinity();
      return r;
    }
    r.j = (t[0] - 0.7) * (t[0] - 0.7) + t[1] * t[1];
    return r;
  };
  BOConfig c;
  c.n_total = 30;
  c.n_seed = 10;
  c.lo = {0.0, -1.0};
  c.hi = {1.0, 1.0};
  c.seed = 2;
  BOResult r = bo_minimize(f, c);
  int n_div = 0;
  for (const EvalRecord& e : r.history) {
    if (e.diverged) {
      ++n_div;
      CHECK(!std::isfinite(e.j));
    }
  }
  CHECK(n_div > 0);
  CHECK(std::isfinite(r.best_evaluated_j));
  CHECK(r.best_evaluated[0] >= 0.5);
}

TEST_CASE("surrogate mean interpolates the evaluated points") {
  Objective f = [](const std::vector<double>& t) {
    ObjectiveResult r;
    r.j = std::sin(3.0 * t[0]) + std::cos(2.0 * t[1]) + t[0] * t[1];
    return r;
  };
  BOConfig c;
  c.n_total = 25;
  c.n_seed = 12;
  c.lo = {0.0, 0.0};
  c.hi = {1.0, 1.0};
  c.seed = 3;
  BOResult r = bo_minimize(f, c);
  for (const EvalRecord& e : r.history) {
    const double pred = r.final_mean(e.theta);
    CHECK(std::abs(pred - e.j) <=
          1e-6 * std::max(1.0, std::abs(e.j)));
  }
}

TEST_CASE("config validation rejects malformed setups") {
  BOConfig c = box2d(20, 6, 1);
  c.n_seed = 1;  // too few
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = box2d(20, 25, 1);  // seed phase longer than budget
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = box2d(20, 6, 1);
  c.hi[0] = c.lo[0];  // empty interval
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = box2d(20, 6, 1);
  c.lo.pop_back();  // dimension mismatch
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = box2d(20, 6, 1);
  c.lo[1] = -std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Rollout objectives
// ---------------------------------------------------------------------------

namespace {

ConfigMap default_cfg() {
  return ConfigMap::parse_file(config_path("vehicle_default.cfg"));
}

}  // namespace

TEST_CASE("estimation cost is exactly zero for a perfectly matched twin") {
  ConfigMap cfg = default_cfg();
  VehicleParams veh = vehicle_params_from_config(cfg);
  TwinConfig tc = twin_config_from_config(cfg);
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kUrban;
  spec.duration_s = 12.0;
  spec.v_nominal = 14.0;
  spec.seed = 4;  // no deviations, no noise: twin reproduces truth bitwise
  TruthRun run = build_truth_run(veh, tc, spec);
  ObserverConfig o;
  for (int i = 0; i < GainSet::kCount; ++i) o.gains.by_index(i) = 0.0;
  o.schedule = StageSchedule{1e9, 0.0, 0.0};
  ObjectiveResult r = til_objective(veh, tc, run, o, {});
  CHECK(!r.diverged);
  CHECK(r.j == 0.0);
  CHECK(r.beta_term == 0.0);
  CHECK(r.mass_term == 0.0);
}

TEST_CASE("estimation cost reflects a held mass offset") {
  ConfigMap cfg = default_cfg();
  VehicleParams veh = vehicle_params_from_config(cfg);
  TwinConfig tc = twin_config_from_config(cfg);
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kUrban;
  spec.duration_s = 12.0;
  spec.v_nominal = 14.0;
  spec.seed = 4;
  spec.truth_dev.dm = 355.0;
  TruthRun run = build_truth_run(veh, tc, spec);
  ObserverConfig o;
  for (int i = 0; i < GainSet::kCount; ++i) o.gains.by_index(i) = 0.0;
  o.schedule = StageSchedule{1e9, 0.0, 0.0};
  ObjectiveResult r = til_objective(veh, tc, run, o, {});
  CHECK(!r.diverged);
  // Mass estimate is frozen at zero: the last-window term is the full 355.
  CHECK(r.mass_term == doctest::Approx(355.0).epsilon(1e-9));
  CHECK(r.j == doctest::Approx(r.beta_term + r.mass_term).epsilon(1e-12));
}

TEST_CASE("diverged estimation is flagged with a non-finite sentinel") {
  ConfigMap cfg = default_cfg();
  VehicleParams veh = vehicle_params_from_config(cfg);
  TwinConfig tc = twin_config_from_config(cfg);
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kUrban;
  spec.duration_s = 10.0;
  spec.v_nominal = 14.0;
  spec.seed = 4;
  spec.truth_dev.dm = 355.0;
  TruthRun run = build_truth_run(veh, tc, spec);
  ObserverConfig o;
  o.gains.k_wz_wz = 500.0;
  o.gains.k_ax_vx = 50.0;
  ObjectiveResult r = til_objective(veh, tc, run, o, {});
  CHECK(r.diverged);
  CHECK(!std::isfinite(r.j));
}

TEST_CASE("benchmark cost is finite for stable gains and flags runaways") {
  ConfigMap cfg = default_cfg();
  BenchParams p = bench_params_from_config(cfg);
  ScenarioSpec spec;
  spec.kind = ScenarioKind::kLaneChangeBraking;
  spec.duration_s = 15.0;
  spec.v_nominal = 20.0;
  spec.seed = 3;
  spec.truth_dev.dm = 355.0;
  TruthRun run = build_truth_run(vehicle_params_from_config(cfg),
                                 twin_config_from_config(cfg), spec);
  BenchGains g;
  g.k_ax_vx = 0.005;
  g.k_ay_vy = 0.005;
  g.k_wz_wz = 0.4;
  g.k_ax_dm = -0.5;
  ObjectiveResult ok = bench_objective(p, run, g, 0.0);
  CHECK(!ok.diverged);
  CHECK(std::isfinite(ok.j));
  CHECK(ok.j == doctest::Approx(ok.beta_term + ok.mass_term).epsilon(1e-12));
  CHECK(ok.j > 0.0);

  BenchGains bad = g;
  bad.k_ax_vx = 0.05;  // past the per-sample stability boundary
  ObjectiveResult div = bench_objective(p, run, bad, 0.0);
  CHECK(div.diverged);
  CHECK(!std::isfinite(div.j));
}
