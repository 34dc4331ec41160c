#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "buzzdet/dives.hpp"
#include "buzzdet/error.hpp"
#include "buzzdet/record.hpp"

namespace buzzdet {

// Parameters of the synthetic tag generator. Dives are trapezoids (linear
// descent, slowly undulating bottom, linear ascent) separated by exponential
// surface intervals; buzzes are placed inside bottom phases only.
struct SynthConfig {
  std::string whale_id = "synth";
  double duration_s = 7200.0;
  double dive_rate_per_hour = 6.0;
  std::pair<double, double> dive_depth_range_m{40.0, 300.0};
  std::pair<double, double> bottom_duration_range_s{60.0, 240.0};
  double vertical_speed_mps = 1.5;
  double surface_min_s = 30.0;
  double bottom_undulation_m = 3.0;
  double foraging_dive_fraction = 1.0;
  double buzz_rate_per_bottom_minute = 1.0;
  std::pair<double, double> buzz_len_range_s{0.4, 6.7};
  double baseline_accel_std_mG = 50.0;
  double buzz_std_multiplier = 3.0;
  double depth_noise_std_m = 0.02;
  std::uint64_t rng_seed = 0;

  void validate() const {
    auto nonneg = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string("SynthConfig: ") + name + " must be >= 0");
    };
    nonneg(duration_s, "duration_s");
    nonneg(dive_rate_per_hour, "dive_rate_per_hour");
    nonneg(buzz_rate_per_bottom_minute, "buzz_rate_per_bottom_minute");
    nonneg(baseline_accel_std_mG, "baseline_accel_std_mG");
    nonneg(depth_noise_std_m, "depth_noise_std_m");
    nonneg(surface_min_s, "surface_min_s");
    nonneg(bottom_undulation_m, "bottom_undulation_m");
    if (!(buzz_len_range_s.first > 0.0) || !(buzz_len_range_s.first <= buzz_len_range_s.second) ||
        !(buzz_len_range_s.second < 60.0))
      throw ConfigError("SynthConfig: buzz_len_range_s must lie within (0, 60) with min <= max");
    if (!(buzz_std_multiplier > 1.0)) throw ConfigError("SynthConfig: buzz_std_multiplier must be > 1");
    if (!(foraging_dive_fraction >= 0.0 && foraging_dive_fraction <= 1.0))
      throw ConfigError("SynthConfig: foraging_dive_fraction must be in [0, 1]");
    if (dive_rate_per_hour > 0.0) {
      const auto [dmin, dmax] = dive_depth_range_m;
      if (!(dmin >= 20.0) || !(dmin <= dmax))
        throw ConfigError("SynthConfig: dive depths must satisfy 20 <= min <= max");
      if (dmax > 3000.0) throw ConfigError("SynthConfig: dive depth beyond 3000 m is not representable");
      if (!(vertical_speed_mps > 0.0)) throw ConfigError("SynthConfig: vertical_speed_mps must be > 0");
      if (!(bottom_duration_range_s.first > 0.0) || bottom_duration_range_s.first > bottom_duration_range_s.second)
        throw ConfigError("SynthConfig: bottom_duration_range_s must be positive with min <= max");
      if (bottom_undulation_m * 2.0 > 0.25 * dmin)
        throw ConfigError("SynthConfig: bottom undulation too large for the shallowest dive");
      if (mean_dive_s() + surface_min_s > 3600.0 / dive_rate_per_hour)
        throw ConfigError("SynthConfig: dives too long for the requested dive rate");
    }
  }

  double mean_dive_s() const {
    const double mean_depth = 0.5 * (dive_depth_range_m.first + dive_depth_range_m.second);
    return 2.0 * mean_depth / vertical_speed_mps +
           0.5 * (bottom_duration_range_s.first + bottom_duration_range_s.second);
  }

  /// Expected buzz positive rate: rate x mean length x bottom fraction.
  double expected_positive_rate(double bottom_fraction) const {
    const double mean_len = 0.5 * (buzz_len_range_s.first + buzz_len_range_s.second);
    return buzz_rate_per_bottom_minute / 60.0 * mean_len * bottom_fraction * foraging_dive_fraction;
  }
};

/// Deterministic synthetic record; returns intervals that were planted as well.
struct SynthOutput {
  WhaleRecord record;
  std::vector<Dive> dives;
  BuzzIntervals buzzes;
};

inline SynthOutput synth_generate_detailed(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](std::pair<double, double> r) { return r.first + (r.second - r.first) * unit(rng); };

  const double fs = kAccelRateHz;
  const auto n = static_cast<std::size_t>(std::floor(cfg.duration_s * fs));
  std::vector<double> profile(n, 0.0);

  if (cfg.dive_rate_per_hour > 0.0 && n > 0) {
    const double surface_mean =
        std::max(cfg.surface_min_s, 3600.0 / cfg.dive_rate_per_hour - cfg.mean_dive_s()) - cfg.surface_min_s;
    std::exponential_distribution<double> surface_gap(surface_mean > 0.0 ? 1.0 / surface_mean : 1e9);
    double t = cfg.surface_min_s + surface_gap(rng);
    while (true) {
      const double depth = uniform(cfg.dive_depth_range_m);
      const double bottom = uniform(cfg.bottom_duration_range_s);
      const double transit = depth / cfg.vertical_speed_mps;
      const double undulations = std::max(1.0, std::round(bottom / 60.0));
      const double total = 2.0 * transit + bottom;
      if ((t + total + 1.0) * fs >= static_cast<double>(n)) break;
      const auto i0 = static_cast<std::size_t>(std::ceil(t * fs));
      const auto i1 = static_cast<std::size_t>(std::floor((t + total) * fs));
      for (std::size_t i = i0; i <= i1 && i < n; ++i) {
        const double u = static_cast<double>(i) / fs - t;
        double z;
        if (u < transit) {
          z = depth * u / transit;
        } else if (u < transit + bottom) {
          const double phase = (u - transit) / bottom;
          z = depth - cfg.bottom_undulation_m * (1.0 - std::cos(2.0 * std::numbers::pi * undulations * phase));
        } else {
          z = depth * std::max(0.0, total - u) / transit;
        }
        profile[i] = z;
      }
      t += total + cfg.surface_min_s + surface_gap(rng);
    }
  }

  SynthOutput out;
  WhaleRecord& rec = out.record;
  rec.whale_id = cfg.whale_id;
  rec.depth.resize(n);
  std::normal_distribution<double> depth_noise(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    rec.depth[i] = std::max(-0.5, profile[i] + cfg.depth_noise_std_m * depth_noise(rng));

  out.dives = detect_dives(rec.depth);
  rec.phase = annotate_phases(rec.depth, out.dives);

  if (cfg.buzz_rate_per_bottom_minute > 0.0) {
    std::exponential_distribution<double> gap(cfg.buzz_rate_per_bottom_minute / 60.0);
    for (const auto& d : out.dives) {
      if (unit(rng) >= cfg.foraging_dive_fraction) continue;
      const double bs = static_cast<double>(d.bottom_start_idx) / fs;
      const double be = static_cast<double>(d.bottom_end_idx) / fs;
      double t = bs + gap(rng);
      while (t < be) {
        // Buzzes sit on the 10 Hz grid of the acoustic labels.
        const double start = std::ceil(t * kDepthRateHz) / kDepthRateHz;
        const double len = std::round(uniform(cfg.buzz_len_range_s) * kDepthRateHz) / kDepthRateHz;
        if (start + len > be) break;
        out.buzzes.push_back({start, start + len});
        t = start + len + gap(rng);
      }
    }
  }
  rec.buzz = rasterize_intervals(out.buzzes, n);

  rec.ax.resize(n);
  rec.ay.resize(n);
  rec.az.resize(n);
  std::normal_distribution<double> accel(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = cfg.baseline_accel_std_mG * (rec.buzz[i] ? cfg.buzz_std_multiplier : 1.0);
    rec.ax[i] = s * accel(rng);
    rec.ay[i] = s * accel(rng);
    rec.az[i] = s * accel(rng);
  }
  rec.validate();
  return out;
}

inline WhaleRecord synth_generate(const SynthConfig& cfg) { return synth_generate_detailed(cfg).record; }

}  // namespace buzzdet
