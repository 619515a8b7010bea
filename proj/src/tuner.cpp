#include "til/tuner.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "til/metrics.hpp"
#include "til/rng.hpp"

namespace til {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kSobolBits = 52;          // fraction bits -> exact double mapping
constexpr double kJitter = 1e-10;       // Gram-matrix diagonal regularizer
constexpr double kAlphaGate = 1e-8;     // max tolerated interpolation slack
constexpr double kMinSeparation = 1e-3;  // unit-box resolution floor

// ---------------------------------------------------------------------------
// Digital-net sequence: primitive polynomials and initial direction integers
// for dimensions 2..13 (dimension 1 is the plain radical-inverse in base 2).
// ---------------------------------------------------------------------------

struct SobolRow {
  int s;
  uint64_t a;
  std::array<uint64_t, 6> m;
};

constexpr SobolRow kSobolTable[12] = {
    {1, 0, {1, 0, 0, 0, 0, 0}},    {2, 1, {1, 3, 0, 0, 0, 0}},
    {3, 1, {1, 3, 1, 0, 0, 0}},    {3, 2, {1, 1, 1, 0, 0, 0}},
    {4, 1, {1, 1, 3, 3, 0, 0}},    {4, 4, {1, 3, 5, 13, 0, 0}},
    {5, 2, {1, 1, 5, 5, 17, 0}},   {5, 4, {1, 1, 5, 5, 5, 0}},
    {5, 7, {1, 1, 7, 11, 19, 0}},  {5, 11, {1, 1, 5, 1, 1, 0}},
    {5, 13, {1, 1, 1, 3, 11, 0}},  {5, 14, {1, 3, 5, 5, 31, 0}},
};

}  // namespace

SobolSeq::SobolSeq(int dim) : dim_(dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw std::invalid_argument("SobolSeq: dimension must be in [1, " +
                                std::to_string(kMaxDim) + "]");
  }
  x_.assign(dim, 0);
  v_.resize(dim);
  for (int d = 0; d < dim; ++d) {
    auto& v = v_[d];
    v.fill(0);
    if (d == 0) {
      for (int k = 0; k < kSobolBits; ++k) {
        v[k] = 1ull << (kSobolBits - 1 - k);
      }
      continue;
    }
    const SobolRow& row = kSobolTable[d - 1];
    const int s = row.s;
    for (int k = 0; k < s; ++k) v[k] = row.m[k] << (kSobolBits - 1 - k);
    for (int k = s; k < kSobolBits; ++k) {
      uint64_t val = v[k - s] ^ (v[k - s] >> s);
      for (int i = 1; i < s; ++i) {
        if ((row.a >> (s - 1 - i)) & 1ull) val ^= v[k - i];
      }
      v[k] = val;
    }
  }
}

std::vector<double> SobolSeq::next() {
  if (index_ > 0) {
    uint64_t m = index_ - 1;
    int c = 0;
    while (m & 1ull) {
      m >>= 1;
      ++c;
    }
    for (int d = 0; d < dim_; ++d) x_[d] ^= v_[d][c];
  }
  ++index_;
  std::vector<double> p(dim_);
  for (int d = 0; d < dim_; ++d) {
    p[d] = std::ldexp(static_cast<double>(x_[d]), -kSobolBits);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Gaussian process with a squared-exponential ARD kernel on the unit box.
// No learned noise term: the surrogate interpolates its data up to kJitter.
// ---------------------------------------------------------------------------

namespace {

struct Gp {
  Eigen::MatrixXd x;      // n x d training inputs (unit box)
  Eigen::VectorXd z;      // standardized targets
  Eigen::MatrixXd lmat;   // Cholesky factor of the Gram matrix
  Eigen::VectorXd alpha;  // Gram^-1 z
  Eigen::VectorXd ell;    // per-dimension lengthscales
  double sf2 = 1.0;       // signal variance
  double jitter = kJitter;
  double y_mean = 0.0, y_std = 1.0;
  double z_best = 0.0;  // smallest standardized target (EI reference)

  double kern(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    double q = 0.0;
    for (int d = 0; d < a.size(); ++d) {
      const double t = (a[d] - b[d]) / ell[d];
      q += t * t;
    }
    return sf2 * std::exp(-0.5 * q);
  }

  void predict(const Eigen::VectorXd& p, double* mu, double* var) const {
    Eigen::VectorXd ks(x.rows());
    for (int i = 0; i < x.rows(); ++i) ks[i] = kern(x.row(i).transpose(), p);
    *mu = ks.dot(alpha);
    if (var) {
      const Eigen::VectorXd w = lmat.triangularView<Eigen::Lower>().solve(ks);
      *var = std::max(sf2 + jitter - w.squaredNorm(), 0.0);
    }
  }
};

// Log marginal likelihood for the given hyperparameters; -inf if the Gram
// matrix cannot be factorized or the fit would not interpolate its data.
double chol_lml(const Eigen::MatrixXd& x, const Eigen::VectorXd& z,
                const Eigen::VectorXd& ell, double sf2, double jitter,
                bool gate, Eigen::MatrixXd* lmat, Eigen::VectorXd* alpha) {
  const int n = static_cast<int>(x.rows());
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = sf2 + jitter;
    for (int j = i + 1; j < n; ++j) {
      double q = 0.0;
      for (int d = 0; d < x.cols(); ++d) {
        const double t = (x(i, d) - x(j, d)) / ell[d];
        q += t * t;
      }
      const double kij = sf2 * std::exp(-0.5 * q);
      k(i, j) = kij;
      k(j, i) = kij;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) return -kInf;
  Eigen::VectorXd a = llt.solve(z);
  if (gate && jitter * a.cwiseAbs().maxCoeff() > kAlphaGate) return -kInf;
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += std::log(llt.matrixLLT()(i, i));
  const double lml = -0.5 * z.dot(a) - logdet -
                     0.5 * n * std::log(2.0 * std::numbers::pi);
  if (!std::isfinite(lml)) return -kInf;
  if (lmat) *lmat = llt.matrixL();
  if (alpha) *alpha = std::move(a);
  return lml;
}

// Downhill-simplex minimizer, adequate for the <=14-dimensional smooth
// hyperparameter landscapes this file produces.
Eigen::VectorXd nm_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x0, double step,
                            int max_iter) {
  const int n = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> xs(n + 1, x0);
  std::vector<double> fv(n + 1);
  for (int i = 1; i <= n; ++i) xs[i][i - 1] += step;
  for (int i = 0; i <= n; ++i) fv[i] = f(xs[i]);
  for (int it = 0; it < max_iter; ++it) {
    std::vector<int> ord(n + 1);
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(),
              [&](int a, int b) { return fv[a] < fv[b]; });
    std::vector<Eigen::VectorXd> xs2(n + 1);
    std::vector<double> fv2(n + 1);
    for (int i = 0; i <= n; ++i) {
      xs2[i] = xs[ord[i]];
      fv2[i] = fv[ord[i]];
    }
    xs = std::move(xs2);
    fv = std::move(fv2);
    if (fv[n] - fv[0] <= 1e-12 * (1.0 + std::abs(fv[0]))) break;

    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) c += xs[i];
    c /= n;

    const Eigen::VectorXd xr = c + (c - xs[n]);
    const double fr = f(xr);
    if (fr < fv[0]) {
      const Eigen::VectorXd xe = c + 2.0 * (c - xs[n]);
      const double fe = f(xe);
      if (fe < fr) {
        xs[n] = xe;
        fv[n] = fe;
      } else {
        xs[n] = xr;
        fv[n] = fr;
      }
    } else if (fr < fv[n - 1]) {
      xs[n] = xr;
      fv[n] = fr;
    } else {
      const bool outside = fr < fv[n];
      const Eigen::VectorXd xc =
          outside ? Eigen::VectorXd(c + 0.5 * (xr - c))
                  : Eigen::VectorXd(c + 0.5 * (xs[n] - c));
      const double fc = f(xc);
      if (fc < std::min(fr, fv[n])) {
        xs[n] = xc;
        fv[n] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          xs[i] = xs[0] + 0.5 * (xs[i] - xs[0]);
          fv[i] = f(xs[i]);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= n; ++i) {
    if (fv[i] < fv[best]) best = i;
  }
  return xs[best];
}

// Hyperparameter vector layout: [log ell_0 .. log ell_{d-1}, log sf].
constexpr double kLogEllLo = -3.912;  // log 0.02
constexpr double kLogEllHi = 1.099;   // log 3
constexpr double kLogSfLo = -4.605;   // log 0.01
constexpr double kLogSfHi = 3.401;    // log 30

Gp fit_gp(const Eigen::MatrixXd& x, const Eigen::VectorXd& yraw, Rng& rng,
          int restarts) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());

  Gp gp;
  gp.x = x;
  gp.y_mean = yraw.mean();
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    var += (yraw[i] - gp.y_mean) * (yraw[i] - gp.y_mean);
  }
  gp.y_std = std::max(std::sqrt(var / n), 1e-12);
  gp.z = (yraw.array() - gp.y_mean) / gp.y_std;
  gp.z_best = gp.z.minCoeff();

  auto neg_lml = [&](const Eigen::VectorXd& h) {
    double viol = 0.0;
    for (int i = 0; i < d; ++i) {
      viol += std::pow(std::max(0.0, h[i] - kLogEllHi), 2) +
              std::pow(std::max(0.0, kLogEllLo - h[i]), 2);
    }
    viol += std::pow(std::max(0.0, h[d] - kLogSfHi), 2) +
            std::pow(std::max(0.0, kLogSfLo - h[d]), 2);
    if (viol > 0.0) return 1e12 * (1.0 + viol);
    Eigen::VectorXd ell(d);
    for (int i = 0; i < d; ++i) ell[i] = std::exp(h[i]);
    const double sf2 = std::exp(2.0 * h[d]);
    const double lml = chol_lml(gp.x, gp.z, ell, sf2, kJitter, true, nullptr,
                                nullptr);
    return std::isfinite(lml) ? -lml : 1e14;
  };

  Eigen::VectorXd best_h;
  double best_val = kInf;
  for (int r = 0; r < std::max(restarts, 1); ++r) {
    Eigen::VectorXd h0(d + 1);
    if (r == 0) {
      h0.setConstant(std::log(0.3));
      h0[d] = 0.0;
    } else {
      for (int i = 0; i < d; ++i) {
        h0[i] = rng.uniform(std::log(0.05), std::log(1.5));
      }
      h0[d] = rng.uniform(std::log(0.3), std::log(5.0));
    }
    const Eigen::VectorXd h = nm_minimize(neg_lml, h0, 0.5, 160);
    const double v = neg_lml(h);
    if (v < best_val) {
      best_val = v;
      best_h = h;
    }
  }

  if (best_val < 1e11) {
    gp.ell.resize(d);
    for (int i = 0; i < d; ++i) gp.ell[i] = std::exp(best_h[i]);
    gp.sf2 = std::exp(2.0 * best_h[d]);
    gp.jitter = kJitter;
    const double lml = chol_lml(gp.x, gp.z, gp.ell, gp.sf2, gp.jitter, true,
                                &gp.lmat, &gp.alpha);
    if (std::isfinite(lml)) return gp;
  }

  // No hyperparameters passed the interpolation gate (pathologically
  // clustered data): fall back to fixed mid-range scales and escalate the
  // regularizer until the factorization succeeds.
  gp.ell = Eigen::VectorXd::Constant(d, 0.25);
  gp.sf2 = 1.0;
  for (double j = kJitter;; j *= 100.0) {
    if (chol_lml(gp.x, gp.z, gp.ell, gp.sf2, j, false, &gp.lmat, &gp.alpha) >
        -kInf) {
      gp.jitter = j;
      return gp;
    }
    if (j > 1e8) throw std::logic_error("surrogate factorization failed");
  }
}

double norm_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

double norm_pdf(double u) {
  return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
}

// Expected improvement below the incumbent (standardized scale).
double expected_improvement(const Gp& gp, const Eigen::VectorXd& p) {
  double mu = 0.0, var = 0.0;
  gp.predict(p, &mu, &var);
  const double sigma = std::sqrt(std::max(var, 0.0));
  const double gap = gp.z_best - mu;
  if (sigma < 1e-12) return std::max(gap, 0.0);
  const double u = gap / sigma;
  return gap * norm_cdf(u) + sigma * norm_pdf(u);
}

// Coordinate pattern search (maximization) on the unit box.
Eigen::VectorXd pattern_max(const std::function<double(const Eigen::VectorXd&)>& f,
                            Eigen::VectorXd x) {
  double fx = f(x);
  for (double st = 0.05; st >= 1e-4; st *= 0.5) {
    for (int guard = 0; guard < 200; ++guard) {
      bool improved = false;
      for (int d = 0; d < x.size(); ++d) {
        for (const double sgn : {1.0, -1.0}) {
          Eigen::VectorXd y = x;
          y[d] = std::clamp(y[d] + sgn * st, 0.0, 1.0);
          const double fy = f(y);
          if (fy > fx + 1e-15) {
            x = std::move(y);
            fx = fy;
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
  }
  return x;
}

double min_separation(const Eigen::MatrixXd& rows, int nrows,
                      const Eigen::VectorXd& p) {
  double best = kInf;
  for (int i = 0; i < nrows; ++i) {
    double s = 0.0;
    for (int d = 0; d < p.size(); ++d) {
      s = std::max(s, std::abs(rows(i, d) - p[d]));
    }
    best = std::min(best, s);
  }
  return best;
}

// Next evaluation point: expected-improvement maximizer over a
// low-discrepancy candidate set plus local refinement, kept a minimum
// distance away from every already-evaluated point.
Eigen::VectorXd propose(const Gp& gp, const BOConfig& cfg, Rng& rng,
                        const Eigen::MatrixXd& evaluated, int n_evaluated) {
  const int d = static_cast<int>(cfg.lo.size());
  auto acq = [&](const Eigen::VectorXd& p) {
    return expected_improvement(gp, p);
  };

  std::vector<std::pair<double, Eigen::VectorXd>> pool;
  pool.reserve(cfg.n_candidates + 3);
  SobolSeq seq(d);
  seq.next();  // discard the origin
  for (int c = 0; c < cfg.n_candidates; ++c) {
    const std::vector<double> s = seq.next();
    Eigen::VectorXd p(d);
    for (int k = 0; k < d; ++k) p[k] = s[k];
    pool.emplace_back(acq(p), p);
  }

  std::vector<int> ord(pool.size());
  std::iota(ord.begin(), ord.end(), 0);
  std::partial_sort(ord.begin(), ord.begin() + 3, ord.end(),
                    [&](int a, int b) { return pool[a].first > pool[b].first; });
  for (int t = 0; t < 3; ++t) {
    Eigen::VectorXd refined = pattern_max(acq, pool[ord[t]].second);
    pool.emplace_back(acq(refined), std::move(refined));
  }

  std::sort(pool.begin(), pool.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [val, p] : pool) {
    if (min_separation(evaluated, n_evaluated, p) >= kMinSeparation) return p;
  }
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd p(d);
    for (int k = 0; k < d; ++k) p[k] = rng.uniform01();
    if (min_separation(evaluated, n_evaluated, p) >= kMinSeparation ||
        t == 49) {
      return p;
    }
  }
  return pool.front().second;  // unreachable
}

}  // namespace

void BOConfig::validate() const {
  if (lo.empty() || lo.size() != hi.size()) {
    throw std::invalid_argument("tuning box: lo/hi dimension mismatch");
  }
  if (static_cast<int>(lo.size()) > SobolSeq::kMaxDim) {
    throw std::invalid_argument("tuning box: too many dimensions");
  }
  for (size_t d = 0; d < lo.size(); ++d) {
    if (!std::isfinite(lo[d]) || !std::isfinite(hi[d]) || !(lo[d] < hi[d])) {
      throw std::invalid_argument(
          "tuning box: bounds must be finite with lo < hi");
    }
  }
  if (n_seed < 2) throw std::invalid_argument("need at least 2 seed evaluations");
  if (n_seed > n_total) {
    throw std::invalid_argument("seed phase exceeds the evaluation budget");
  }
  if (n_candidates < 1) throw std::invalid_argument("need >= 1 candidate");
  if (lml_restarts < 1) throw std::invalid_argument("need >= 1 restart");
}

BOResult bo_minimize(const Objective& f, const BOConfig& cfg) {
  cfg.validate();
  const int dim = static_cast<int>(cfg.lo.size());
  Rng rng(cfg.seed);

  BOResult res;
  res.history.reserve(cfg.n_total);
  Eigen::MatrixXd ux(cfg.n_total, dim);  // unit-box evaluation sites

  auto to_real = [&](const Eigen::VectorXd& u) {
    std::vector<double> t(dim);
    for (int d = 0; d < dim; ++d) {
      t[d] = std::clamp(cfg.lo[d] + u[d] * (cfg.hi[d] - cfg.lo[d]), cfg.lo[d],
                        cfg.hi[d]);
    }
    return t;
  };

  auto evaluate = [&](const Eigen::VectorXd& u) {
    const int i = static_cast<int>(res.history.size());
    ux.row(i) = u.transpose();
    EvalRecord rec;
    rec.theta = to_real(u);
    const ObjectiveResult r = f(rec.theta);
    rec.j = r.j;
    rec.diverged = r.diverged || !std::isfinite(r.j);
    rec.beta_term = r.beta_term;
    rec.mass_term = r.mass_term;
    res.history.push_back(std::move(rec));
  };

  for (int i = 0; i < cfg.n_seed; ++i) {
    Eigen::VectorXd u(dim);
    for (int d = 0; d < dim; ++d) u[d] = rng.uniform01();
    evaluate(u);
  }

  auto penalized = [&]() {
    double worst = -kInf;
    for (const EvalRecord& e : res.history) {
      if (!e.diverged) worst = std::max(worst, e.j);
    }
    const double pen =
        worst > 0.0 ? 10.0 * worst : worst + 10.0 * (1.0 + std::abs(worst));
    Eigen::VectorXd y(res.history.size());
    for (size_t i = 0; i < res.history.size(); ++i) {
      y[i] = res.history[i].diverged ? pen : res.history[i].j;
    }
    return y;
  };

  bool any_finite = false;
  for (const EvalRecord& e : res.history) any_finite |= !e.diverged;
  if (!any_finite) {
    throw std::runtime_error(
        "tuning: every seed evaluation diverged; widen or recenter the "
        "tuning bounds");
  }

  for (int i = cfg.n_seed; i < cfg.n_total; ++i) {
    const Gp gp = fit_gp(ux.topRows(i), penalized(), rng, cfg.lml_restarts);
    evaluate(propose(gp, cfg, rng, ux, i));
  }

  // Final surrogate over everything, for reporting and the predicted best.
  Gp gpf = fit_gp(ux.topRows(cfg.n_total), penalized(), rng, cfg.lml_restarts);

  int best = -1;
  for (int i = 0; i < cfg.n_total; ++i) {
    if (res.history[i].diverged) continue;
    if (best < 0 || res.history[i].j < res.history[best].j) best = i;
  }
  res.best_evaluated = res.history[best].theta;
  res.best_evaluated_j = res.history[best].j;

  auto neg_mean = [&](const Eigen::VectorXd& p) {
    double mu = 0.0;
    gpf.predict(p, &mu, nullptr);
    return -mu;
  };
  Eigen::VectorXd arg = ux.row(best).transpose();
  double val = neg_mean(arg);
  SobolSeq seq(dim);
  for (int c = 0; c < cfg.n_candidates; ++c) {
    const std::vector<double> s = seq.next();
    Eigen::VectorXd p(dim);
    for (int k = 0; k < dim; ++k) p[k] = s[k];
    const double v = neg_mean(p);
    if (v > val) {
      val = v;
      arg = p;
    }
  }
  for (int i = 0; i < cfg.n_total; ++i) {
    const double v = neg_mean(ux.row(i).transpose());
    if (v > val) {
      val = v;
      arg = ux.row(i).transpose();
    }
  }
  arg = pattern_max(neg_mean, arg);
  res.best_predicted = to_real(arg);
  res.best_predicted_j = gpf.y_mean - gpf.y_std * neg_mean(arg);

  res.final_mean = [g = std::make_shared<Gp>(std::move(gpf)), lo = cfg.lo,
                    hi = cfg.hi](const std::vector<double>& theta) {
    if (theta.size() != lo.size()) {
      throw std::invalid_argument("final_mean: dimension mismatch");
    }
    Eigen::VectorXd u(lo.size());
    for (size_t d = 0; d < lo.size(); ++d) {
      u[d] = (theta[d] - lo[d]) / (hi[d] - lo[d]);
    }
    double mu = 0.0;
    g->predict(u, &mu, nullptr);
    return g->y_mean + g->y_std * mu;
  };
  return res;
}

// ---------------------------------------------------------------------------
// Rollout objectives
// ---------------------------------------------------------------------------

namespace {

ObjectiveResult score_series(const std::vector<double>& beta_true,
                             const std::vector<double>& beta_est,
                             const std::vector<double>& dm_est, double dm_true,
                             double fs) {
  ObjectiveResult out;
  const std::vector<double> dm_ref(dm_est.size(), dm_true);
  out.j = cost_j(beta_true, beta_est, dm_ref, dm_est, fs);

  double beta_acc = 0.0;
  for (size_t i = 0; i < beta_true.size(); ++i) {
    const double e = beta_true[i] - beta_est[i];
    beta_acc += 100.0 * e * e;
  }
  out.beta_term = std::sqrt(beta_acc / static_cast<double>(beta_true.size()));

  const auto want = static_cast<size_t>(std::llround(10.0 * fs));
  const size_t n = want == 0 ? 1 : (want > dm_est.size() ? dm_est.size() : want);
  double dm_acc = 0.0;
  for (size_t i = dm_est.size() - n; i < dm_est.size(); ++i) {
    const double e = dm_true - dm_est[i];
    dm_acc += e * e;
  }
  out.mass_term = std::sqrt(dm_acc / static_cast<double>(n));
  return out;
}

}  // namespace

ObjectiveResult til_objective(const VehicleParams& base,
                              const TwinConfig& twin_cfg, const TruthRun& run,
                              const ObserverConfig& ocfg,
                              const ParamDeviation& init_dev) {
  const EstimationResult r = run_estimation(base, twin_cfg, run, ocfg, init_dev);
  if (r.diverged || r.samples.empty()) {
    ObjectiveResult out;
    out.diverged = true;
    out.j = kInf;
    return out;
  }
  return score_series(r.beta_true_series(), r.beta_twin_series(), r.dm_series(),
                      run.truth_dev.dm, 1.0 / run.dt);
}

ObjectiveResult bench_objective(const BenchParams& params, const TruthRun& run,
                                const BenchGains& gains, double init_dm) {
  const BenchResult r = run_benchmark_estimation(params, run, gains, init_dm);
  if (r.diverged || r.samples.empty()) {
    ObjectiveResult out;
    out.diverged = true;
    out.j = kInf;
    return out;
  }
  std::vector<double> beta_true(r.samples.size());
  for (size_t k = 0; k < r.samples.size(); ++k) {
    beta_true[k] = run.beta(static_cast<int>(k));
  }
  return score_series(beta_true, r.beta_series(), r.dm_series(),
                      run.truth_dev.dm, 1.0 / run.dt);
}

std::vector<int> tunable_gain_indices(const GainBounds& b) {
  std::vector<int> idx;
  for (int i = 0; i < GainSet::kCount; ++i) {
    if (b.lo[i] < b.hi[i]) idx.push_back(i);
  }
  return idx;
}

GainSet apply_gain_theta(GainSet base, const std::vector<int>& idx,
                         const std::vector<double>& theta) {
  if (idx.size() != theta.size()) {
    throw std::invalid_argument("apply_gain_theta: size mismatch");
  }
  for (size_t k = 0; k < idx.size(); ++k) base.by_index(idx[k]) = theta[k];
  return base;
}

}  // namespace til
