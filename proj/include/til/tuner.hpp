#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "til/benchmark.hpp"
#include "til/observer.hpp"
#include "til/scenario.hpp"
#include "til/twin.hpp"

namespace til {

// ---------------------------------------------------------------------------
// Low-discrepancy sequence (base-2 digital net, Gray-code construction).
// Supports up to 13 dimensions, which covers every tuning box in this
// project. The first point returned is the origin; callers that want
// strictly interior points should discard it.
// ---------------------------------------------------------------------------
class SobolSeq {
 public:
  static constexpr int kMaxDim = 13;
  explicit SobolSeq(int dim);  // throws std::invalid_argument out of range
  std::vector<double> next();

 private:
  int dim_;
  uint64_t index_ = 0;
  std::vector<uint64_t> x_;                 // current integer state per dim
  std::vector<std::array<uint64_t, 64>> v_;  // direction numbers per dim
};

// ---------------------------------------------------------------------------
// Gaussian-process Bayesian optimization (minimization) over a box.
// ---------------------------------------------------------------------------

struct BOConfig {
  int n_total = 120;  // total objective evaluations, seed phase included
  int n_seed = 20;    // random evaluations before the surrogate loop
  std::vector<double> lo, hi;  // box bounds, one entry per dimension
  uint64_t seed = 1;
  int n_candidates = 1000;  // acquisition candidates per iteration
  int lml_restarts = 3;     // hyperparameter fits per surrogate update
  void validate() const;  // throws std::invalid_argument
};

// What one objective evaluation reports back to the optimizer.
struct ObjectiveResult {
  double j = 0.0;
  bool diverged = false;
  // Diagnostics for rollout objectives (zero for synthetic ones).
  double beta_term = 0.0;
  double mass_term = 0.0;
};

using Objective = std::function<ObjectiveResult(const std::vector<double>&)>;

struct EvalRecord {
  std::vector<double> theta;
  double j = 0.0;  // as evaluated; non-finite iff diverged
  bool diverged = false;
  double beta_term = 0.0;
  double mass_term = 0.0;
};

struct BOResult {
  // Best point actually evaluated (finite objective) and its value.
  std::vector<double> best_evaluated;
  double best_evaluated_j = 0.0;
  // Minimizer of the final surrogate posterior mean.
  std::vector<double> best_predicted;
  double best_predicted_j = 0.0;  // surrogate mean at best_predicted
  std::vector<EvalRecord> history;  // exactly n_total records, in order
  // Final surrogate posterior mean, queryable anywhere in the box.
  std::function<double(const std::vector<double>&)> final_mean;
};

// Sequential model-based minimization: n_seed uniform-random evaluations,
// then one evaluation per iteration at the expected-improvement maximizer
// of a squared-exponential (ARD) Gaussian-process surrogate. Diverged
// evaluations are recorded as such and enter the surrogate at an adaptive
// penalty (10x the worst finite value seen). Throws std::runtime_error if
// the whole seed phase diverges (the box likely needs widening).
BOResult bo_minimize(const Objective& f, const BOConfig& cfg);

// ---------------------------------------------------------------------------
// Rollout objectives: sideslip tracking + terminal mass-estimate accuracy,
//   J = sqrt(mean k_beta * (beta - beta_hat)^2)
//     + sqrt(mean over the last 10 s of (dm_true - dm_hat)^2).
// A diverged rollout returns j = +inf with the flag set; the optimizer
// substitutes its penalty internally.
// ---------------------------------------------------------------------------

ObjectiveResult til_objective(const VehicleParams& base,
                              const TwinConfig& twin_cfg, const TruthRun& run,
                              const ObserverConfig& ocfg,
                              const ParamDeviation& init_dev);

ObjectiveResult bench_objective(const BenchParams& params, const TruthRun& run,
                                const BenchGains& gains, double init_dm);

// Tuning-box helpers: the dimensions of theta are the gain indices whose
// bounds enclose a non-empty interval, in GainSet::by_index order.
std::vector<int> tunable_gain_indices(const GainBounds& b);
GainSet apply_gain_theta(GainSet base, const std::vector<int>& idx,
                         const std::vector<double>& theta);

}  // namespace til
