#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "buzzdet/error.hpp"
#include "buzzdet/record.hpp"

namespace buzzdet {

inline constexpr std::size_t kJerkWindow = 20;          // 200 ms at 100 Hz
inline constexpr double kJerkWindowSeconds = 0.2;

enum class JerkMode { PerAxis, EuclideanNorm };

/// Jerk in mG/s at 100 Hz, length N-1. In EuclideanNorm mode `x` holds the
/// per-step norm across axes and `y`, `z` are empty.
struct JerkSeries {
  JerkMode mode = JerkMode::PerAxis;
  std::vector<double> x, y, z;
  std::size_t size() const { return x.size(); }
};

inline JerkSeries compute_jerk(std::span<const double> ax, std::span<const double> ay, std::span<const double> az,
                               JerkMode mode = JerkMode::PerAxis, double rate_hz = kAccelRateHz) {
  if (ax.size() != ay.size() || ax.size() != az.size()) throw ShapeError("compute_jerk: axis lengths differ");
  if (ax.size() < 2) throw ValidationError("compute_jerk: need at least 2 samples");
  const std::size_t n = ax.size() - 1;
  JerkSeries j;
  j.mode = mode;
  auto diff = [&](std::span<const double> a) {
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = (a[i + 1] - a[i]) * rate_hz;
    return d;
  };
  j.x = diff(ax);
  j.y = diff(ay);
  j.z = diff(az);
  if (mode == JerkMode::EuclideanNorm) {
    for (std::size_t i = 0; i < n; ++i) j.x[i] = std::sqrt(j.x[i] * j.x[i] + j.y[i] * j.y[i] + j.z[i] * j.z[i]);
    j.y.clear();
    j.z.clear();
  }
  return j;
}

inline JerkSeries compute_jerk(const WhaleRecord& r, JerkMode mode = JerkMode::PerAxis) {
  return compute_jerk(r.ax, r.ay, r.az, mode, r.sample_rate);
}

/// RMS over non-overlapping 20-step windows; the trailing partial window is dropped.
inline std::vector<double> rms_jerk(const JerkSeries& j, std::size_t window = kJerkWindow) {
  if (j.size() < window) throw ValidationError("rms_jerk: need at least " + std::to_string(window) + " jerk samples");
  const std::size_t nw = j.size() / window;
  std::vector<double> out(nw);
  const bool per_axis = j.mode == JerkMode::PerAxis;
  const double count = static_cast<double>(window * (per_axis ? 3 : 1));
  for (std::size_t w = 0; w < nw; ++w) {
    double s = 0.0;
    for (std::size_t i = w * window; i < (w + 1) * window; ++i) {
      s += j.x[i] * j.x[i];
      if (per_axis) s += j.y[i] * j.y[i] + j.z[i] * j.z[i];
    }
    out[w] = std::sqrt(s / count);
  }
  return out;
}

/// Window k covers samples [20k, 20k+20); label 1 iff at least half are 1.
inline std::vector<std::uint8_t> window_buzz_labels(std::span<const std::uint8_t> buzz, std::size_t n_windows,
                                                    std::size_t window = kJerkWindow) {
  if (n_windows * window > buzz.size()) throw ShapeError("window_buzz_labels: label series too short");
  std::vector<std::uint8_t> out(n_windows);
  for (std::size_t w = 0; w < n_windows; ++w) {
    std::size_t ones = 0;
    for (std::size_t i = w * window; i < (w + 1) * window; ++i) ones += buzz[i];
    out[w] = 2 * ones >= window ? 1 : 0;
  }
  return out;
}

struct SweepRow {
  double threshold = 0.0;
  double delay_s = 0.0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::optional<double> precision, recall;
};

struct SweepOptions {
  double threshold_min = 0.0;
  double threshold_max = 166000.0;
  double threshold_step = 2000.0;
  std::vector<double> delays_s{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  double window_s = kJerkWindowSeconds;

  std::vector<double> thresholds() const {
    if (!(threshold_step > 0.0) || threshold_max < threshold_min) throw ConfigError("sweep: bad threshold range");
    std::vector<double> t;
    const auto n = static_cast<std::size_t>(std::floor((threshold_max - threshold_min) / threshold_step + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) t.push_back(threshold_min + static_cast<double>(k) * threshold_step);
    return t;
  }
};

/// Converts a delay in seconds to a whole number of windows.
inline std::size_t delay_windows(double delay_s, double window_s = kJerkWindowSeconds) {
  const double k = delay_s / window_s;
  const double r = std::round(k);
  if (delay_s < 0.0 || std::abs(k - r) > 1e-9)
    throw ConfigError("sweep: delay " + std::to_string(delay_s) + " s is not a non-negative multiple of " +
                      std::to_string(window_s) + " s");
  return static_cast<std::size_t>(r);
}

inline void finish_ratios(SweepRow& row) {
  if (row.tp + row.fp > 0) row.precision = static_cast<double>(row.tp) / static_cast<double>(row.tp + row.fp);
  if (row.tp + row.fn > 0) row.recall = static_cast<double>(row.tp) / static_cast<double>(row.tp + row.fn);
}

/// For delay k windows, RMS window t is paired with label t-k for t >= k.
/// Positives are RMS > threshold. Rows are ordered by delay, then threshold.
inline std::vector<SweepRow> sweep(std::span<const double> rms, std::span<const std::uint8_t> labels,
                                   const SweepOptions& opt = {}) {
  if (rms.size() != labels.size()) throw ShapeError("sweep: RMS and label series differ in length");
  const auto thresholds = opt.thresholds();
  std::vector<SweepRow> rows;
  rows.reserve(thresholds.size() * opt.delays_s.size());
  for (double d : opt.delays_s) {
    const std::size_t k = delay_windows(d, opt.window_s);
    for (double thr : thresholds) {
      SweepRow row;
      row.threshold = thr;
      row.delay_s = d;
      for (std::size_t t = k; t < rms.size(); ++t) {
        const bool pos = rms[t] > thr, lab = labels[t - k] != 0;
        if (pos && lab) ++row.tp;
        else if (pos) ++row.fp;
        else if (lab) ++row.fn;
        else ++row.tn;
      }
      finish_ratios(row);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace buzzdet
