#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "buzzdet/dives.hpp"
#include "buzzdet/error.hpp"
#include "buzzdet/record.hpp"

namespace buzzdet {

struct WindowSpec {
  std::size_t size = 100;
  std::size_t stride = 50;

  void validate() const {
    if (size == 0 || stride == 0 || stride > size) throw ConfigError("WindowSpec: need 0 < stride <= size");
  }
};

/// Number of full windows; a trailing remainder shorter than a stride is dropped.
inline std::size_t make_windows(std::size_t n_samples, const WindowSpec& spec = {}) {
  spec.validate();
  if (n_samples < spec.size) return 0;
  return (n_samples - spec.size) / spec.stride + 1;
}

/// 1 iff strictly more than half of the window is buzz.
inline std::uint8_t label_window(std::span<const std::uint8_t> buzz_slice) {
  std::size_t s = 0;
  for (auto b : buzz_slice) s += b;
  return 2 * s > buzz_slice.size() ? 1 : 0;
}

/// Strict local maxima; plateaus never count.
inline std::size_t count_peaks(std::span<const double> x) {
  std::size_t c = 0;
  for (std::size_t i = 1; i + 1 < x.size(); ++i)
    if (x[i] > x[i - 1] && x[i] > x[i + 1]) ++c;
  return c;
}

/// Mean gap between consecutive strict local maxima in seconds; 0 with fewer than two peaks.
inline double mean_peak_interval(std::span<const double> x, double dt = 1.0 / kAccelRateHz) {
  std::size_t first = 0, last = 0, count = 0;
  for (std::size_t i = 1; i + 1 < x.size(); ++i) {
    if (x[i] > x[i - 1] && x[i] > x[i + 1]) {
      if (count == 0) first = i;
      last = i;
      ++count;
    }
  }
  if (count < 2) return 0.0;
  // Gaps telescope: their sum is last - first.
  return static_cast<double>(last - first) / static_cast<double>(count - 1) * dt;
}

/// Pearson correlation; 0 when either input has zero variance.
inline double pearson_corr(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw ValidationError("pearson_corr: need equal lengths >= 2");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline constexpr std::size_t kNumRealFeatures = 26;

inline const std::array<std::string, kNumRealFeatures>& feature_names() {
  static const std::array<std::string, kNumRealFeatures> names = {
      "ax_mean", "ax_std", "ax_rms", "ax_minmax",
      "ay_mean", "ay_std", "ay_rms", "ay_minmax",
      "az_mean", "az_std", "az_rms", "az_minmax",
      "depth_mean",
      "am_std", "am_rms", "am_minmax",
      "ax_peaks", "ay_peaks", "az_peaks",
      "ax_peak_interval_s", "ay_peak_interval_s", "az_peak_interval_s",
      "peak_count_var",
      "corr_xy", "corr_yz", "corr_zx"};
  return names;
}

inline const std::array<std::string, 4>& phase_column_names() {
  static const std::array<std::string, 4> names = {"phase_surface", "phase_descent", "phase_bottom",
                                                   "phase_ascent"};
  return names;
}

struct FeatureRow {
  std::size_t w_idx = 0;
  double start_s = 0.0;
  std::array<double, kNumRealFeatures> values{};
  std::array<std::uint8_t, 4> phase{};
  std::uint8_t label = 0;

  friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

struct FeatureTable {
  std::string whale_id;
  WindowSpec spec;
  std::vector<FeatureRow> rows;

  // Model-facing width: 26 real features plus the 4 one-hot phase columns.
  static constexpr std::size_t width() { return kNumRealFeatures + 4; }
};

enum class WindowPhaseRule { Center, Majority };

namespace detail {

struct Moments {
  double mean, std, rms, minmax;
};

// Mean, sample STD (n-1), RMS (n) and max-min.
inline Moments moments(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double sum = 0.0, sq = 0.0;
  double lo = x[0], hi = x[0];
  for (double v : x) {
    sum += v;
    sq += v * v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double mean = sum / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, x.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0, std::sqrt(sq / n), hi - lo};
}

}  // namespace detail

/// Features of one window given the three axes, depth and phases of its samples.
inline std::array<double, kNumRealFeatures> window_features(std::span<const double> ax, std::span<const double> ay,
                                                            std::span<const double> az,
                                                            std::span<const double> depth) {
  std::array<double, kNumRealFeatures> f{};
  std::size_t k = 0;
  for (auto axis : {ax, ay, az}) {
    const auto m = detail::moments(axis);
    f[k++] = m.mean;
    f[k++] = m.std;
    f[k++] = m.rms;
    f[k++] = m.minmax;
  }
  double dsum = 0.0;
  for (double v : depth) dsum += v;
  f[k++] = dsum / static_cast<double>(depth.size());

  std::vector<double> mag(ax.size());
  for (std::size_t i = 0; i < ax.size(); ++i) mag[i] = std::sqrt(ax[i] * ax[i] + ay[i] * ay[i] + az[i] * az[i]);
  const auto mm = detail::moments(mag);
  f[k++] = mm.std;
  f[k++] = mm.rms;
  f[k++] = mm.minmax;

  const std::array<double, 3> peaks = {static_cast<double>(count_peaks(ax)), static_cast<double>(count_peaks(ay)),
                                       static_cast<double>(count_peaks(az))};
  for (double p : peaks) f[k++] = p;
  f[k++] = mean_peak_interval(ax);
  f[k++] = mean_peak_interval(ay);
  f[k++] = mean_peak_interval(az);
  const double pm = (peaks[0] + peaks[1] + peaks[2]) / 3.0;
  f[k++] = ((peaks[0] - pm) * (peaks[0] - pm) + (peaks[1] - pm) * (peaks[1] - pm) + (peaks[2] - pm) * (peaks[2] - pm)) /
           2.0;

  f[k++] = pearson_corr(ax, ay);
  f[k++] = pearson_corr(ay, az);
  f[k++] = pearson_corr(az, ax);
  return f;
}

/// One feature row per window of the record.
inline FeatureTable featurize(const WhaleRecord& rec, const WindowSpec& spec = {},
                              WindowPhaseRule phase_rule = WindowPhaseRule::Center) {
  spec.validate();
  FeatureTable t;
  t.whale_id = rec.whale_id;
  t.spec = spec;
  const std::size_t nw = make_windows(rec.size(), spec);
  t.rows.reserve(nw);
  for (std::size_t w = 0; w < nw; ++w) {
    const std::size_t s = w * spec.stride;
    auto sub = [&](const std::vector<double>& v) { return std::span<const double>(v).subspan(s, spec.size); };
    FeatureRow row;
    row.w_idx = w;
    row.start_s = static_cast<double>(s) / rec.sample_rate;
    row.values = window_features(sub(rec.ax), sub(rec.ay), sub(rec.az), sub(rec.depth));
    DivePhase ph = rec.phase[s + spec.size / 2];
    if (phase_rule == WindowPhaseRule::Majority) {
      std::array<std::size_t, 4> votes{};
      for (std::size_t i = s; i < s + spec.size; ++i) ++votes[static_cast<std::size_t>(rec.phase[i])];
      ph = static_cast<DivePhase>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
    row.phase = one_hot_phase(ph);
    row.label = label_window(std::span<const std::uint8_t>(rec.buzz).subspan(s, spec.size));
    t.rows.push_back(row);
  }
  return t;
}

}  // namespace buzzdet
