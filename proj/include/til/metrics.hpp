#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace til {

// Root-mean-square of a series slice [begin, end).
inline double rms(const std::vector<double>& series, size_t begin, size_t end) {
  if (begin >= end || end > series.size()) throw std::invalid_argument("rms: bad slice");
  double acc = 0.0;
  for (size_t i = begin; i < end; ++i) acc += series[i] * series[i];
  return std::sqrt(acc / static_cast<double>(end - begin));
}

inline double rms(const std::vector<double>& series) { return rms(series, 0, series.size()); }

// RMS over the trailing `window_s` seconds (the whole series if shorter).
inline double rms_last_window(const std::vector<double>& series, double fs_hz,
                              double window_s = 1.0) {
  if (series.empty()) throw std::invalid_argument("rms_last_window: empty series");
  const auto want = static_cast<size_t>(std::llround(window_s * fs_hz));
  const size_t n = want == 0 ? 1 : (want > series.size() ? series.size() : want);
  return rms(series, series.size() - n, series.size());
}

// Percentage error metric: trailing-window RMS of the estimation error,
// normalized by the true parameter deviation.
inline double rms_pct(const std::vector<double>& error_series, double fs_hz, double truth_deviation,
                      double window_s = 1.0) {
  if (truth_deviation == 0.0) throw std::invalid_argument("rms_pct: zero truth deviation");
  return 100.0 * rms_last_window(error_series, fs_hz, window_s) / std::fabs(truth_deviation);
}

// Gain-tuning cost: weighted sideslip RMS over the full horizon plus mass-error
// RMS over the trailing 10 s. `k_beta` weights the squared sideslip error.
inline double cost_j(const std::vector<double>& beta_true, const std::vector<double>& beta_est,
                     const std::vector<double>& dm_true, const std::vector<double>& dm_est,
                     double fs_hz, double k_beta = 100.0) {
  if (beta_true.size() != beta_est.size() || dm_true.size() != dm_est.size() || beta_true.empty() ||
      dm_true.empty())
    throw std::invalid_argument("cost_j: series size mismatch");
  double beta_acc = 0.0;
  for (size_t i = 0; i < beta_true.size(); ++i) {
    const double e = beta_true[i] - beta_est[i];
    beta_acc += k_beta * e * e;
  }
  const double beta_term = std::sqrt(beta_acc / static_cast<double>(beta_true.size()));

  const auto want = static_cast<size_t>(std::llround(10.0 * fs_hz));
  const size_t n = want == 0 ? 1 : (want > dm_true.size() ? dm_true.size() : want);
  double dm_acc = 0.0;
  for (size_t i = dm_true.size() - n; i < dm_true.size(); ++i) {
    const double e = dm_true[i] - dm_est[i];
    dm_acc += e * e;
  }
  return beta_term + std::sqrt(dm_acc / static_cast<double>(n));
}

}  // namespace til
