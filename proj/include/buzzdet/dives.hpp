#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "buzzdet/error.hpp"

namespace buzzdet {

enum class DivePhase : std::uint8_t { Surface = 0, Descent = 1, Bottom = 2, Ascent = 3 };

inline constexpr std::string_view phase_name(DivePhase p) {
  switch (p) {
    case DivePhase::Surface: return "surface";
    case DivePhase::Descent: return "descent";
    case DivePhase::Bottom: return "bottom";
    case DivePhase::Ascent: return "ascent";
  }
  return "?";
}

/// One-hot encoding in the order (surface, descent, bottom, ascent).
inline constexpr std::array<std::uint8_t, 4> one_hot_phase(DivePhase p) {
  std::array<std::uint8_t, 4> v{0, 0, 0, 0};
  v[static_cast<std::size_t>(p)] = 1;
  return v;
}

/// A detected dive. All indices are 100 Hz sample indices, half-open.
struct Dive {
  std::size_t start_idx = 0;
  std::size_t end_idx = 0;
  double max_depth_m = 0.0;
  std::size_t bottom_start_idx = 0;
  std::size_t bottom_end_idx = 0;

  std::size_t length() const { return end_idx - start_idx; }
  friend bool operator==(const Dive&, const Dive&) = default;
};

struct DiveOptions {
  double onset_depth_m = 10.0;      // run membership is depth > onset
  double min_max_depth_m = 20.0;    // a run counts as a dive if its max >= this
  double bottom_fraction = 0.75;    // bottom = depth >= fraction * max
  std::size_t median_window = 0;    // 0 disables the optional pre-filter; must be odd otherwise
};

/// Running median with an odd window, edges use the truncated window.
inline std::vector<double> median_filter(std::span<const double> x, std::size_t window) {
  if (window == 0 || window == 1) return {x.begin(), x.end()};
  if (window % 2 == 0) throw ConfigError("median_filter: window must be odd");
  const std::size_t half = window / 2;
  std::vector<double> out(x.size());
  std::vector<double> buf;
  buf.reserve(window);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(x.size(), i + half + 1);
    buf.assign(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(hi));
    auto mid = buf.begin() + static_cast<std::ptrdiff_t>(buf.size() / 2);
    std::nth_element(buf.begin(), mid, buf.end());
    out[i] = *mid;
  }
  return out;
}

namespace detail {

// Bottom span [first, last] of samples at or below fraction*max, returned half-open.
inline void fill_bottom(Dive& d, std::span<const double> depth, double fraction) {
  const double level = fraction * d.max_depth_m;
  std::size_t first = d.end_idx, last = d.start_idx;
  for (std::size_t i = d.start_idx; i < d.end_idx; ++i) {
    if (depth[i] >= level) {
      if (first == d.end_idx) first = i;
      last = i;
    }
  }
  d.bottom_start_idx = first;
  d.bottom_end_idx = last + 1;
}

}  // namespace detail

/// Maximal runs of depth strictly above the onset depth whose maximum reaches
/// the dive threshold, in chronological order.
inline std::vector<Dive> detect_dives(std::span<const double> depth, const DiveOptions& opt = {}) {
  std::vector<double> filtered;
  if (opt.median_window > 1) {
    filtered = median_filter(depth, opt.median_window);
    depth = filtered;
  }
  std::vector<Dive> dives;
  std::size_t i = 0;
  const std::size_t n = depth.size();
  while (i < n) {
    if (!(depth[i] > opt.onset_depth_m)) {
      ++i;
      continue;
    }
    Dive d;
    d.start_idx = i;
    double mx = depth[i];
    while (i < n && depth[i] > opt.onset_depth_m) {
      mx = std::max(mx, depth[i]);
      ++i;
    }
    d.end_idx = i;
    d.max_depth_m = mx;
    if (mx >= opt.min_max_depth_m) {
      detail::fill_bottom(d, depth, opt.bottom_fraction);
      dives.push_back(d);
    }
  }
  return dives;
}

/// Phase labels for the samples of one dive, indexed from dive.start_idx.
inline std::vector<DivePhase> segment_phases(const Dive& dive, std::span<const double> depth,
                                             double bottom_fraction = 0.75) {
  if (dive.end_idx > depth.size() || dive.start_idx >= dive.end_idx)
    throw ValidationError("segment_phases: dive outside depth series");
  Dive d = dive;
  detail::fill_bottom(d, depth, bottom_fraction);
  std::vector<DivePhase> out(d.length(), DivePhase::Descent);
  for (std::size_t i = d.bottom_start_idx; i < d.bottom_end_idx; ++i)
    out[i - d.start_idx] = DivePhase::Bottom;
  for (std::size_t i = d.bottom_end_idx; i < d.end_idx; ++i)
    out[i - d.start_idx] = DivePhase::Ascent;
  return out;
}

/// Phase of every sample of the series; samples outside dives are Surface.
inline std::vector<DivePhase> annotate_phases(std::span<const double> depth,
                                              const std::vector<Dive>& dives,
                                              double bottom_fraction = 0.75) {
  std::vector<DivePhase> phase(depth.size(), DivePhase::Surface);
  for (const auto& d : dives) {
    auto seg = segment_phases(d, depth, bottom_fraction);
    std::copy(seg.begin(), seg.end(), phase.begin() + static_cast<std::ptrdiff_t>(d.start_idx));
  }
  return phase;
}

inline std::vector<DivePhase> annotate_phases(std::span<const double> depth, const DiveOptions& opt = {}) {
  if (opt.median_window > 1) {
    const auto filtered = median_filter(depth, opt.median_window);
    DiveOptions raw = opt;
    raw.median_window = 0;
    return annotate_phases(filtered, detect_dives(filtered, raw), opt.bottom_fraction);
  }
  return annotate_phases(depth, detect_dives(depth, opt), opt.bottom_fraction);
}

}  // namespace buzzdet
