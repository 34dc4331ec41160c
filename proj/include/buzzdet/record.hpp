#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "buzzdet/dives.hpp"
#include "buzzdet/error.hpp"

namespace buzzdet {

inline constexpr double kAccelRateHz = 100.0;
inline constexpr double kDepthRateHz = 10.0;
inline constexpr std::size_t kUpsampleFactor = 10;

// Half-open time interval in seconds.
struct TimeInterval {
  double start_s = 0.0;
  double end_s = 0.0;
  double length() const { return end_s - start_s; }
  friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

using BuzzLabels10Hz = std::vector<std::uint8_t>;
using BuzzIntervals = std::vector<TimeInterval>;

/// Channels as delivered by the tag: accel at 100 Hz, depth and buzz at 10 Hz
/// (or buzz as a list of intervals).
struct RawChannels {
  std::string whale_id;
  std::vector<double> accel_x, accel_y, accel_z;
  std::vector<double> depth;
  std::variant<BuzzLabels10Hz, BuzzIntervals> buzz = BuzzLabels10Hz{};
};

/// Aligned 100 Hz record: three accel axes (mG), depth (m, positive down),
/// dive phase and binary buzz label per sample.
struct WhaleRecord {
  std::string whale_id;
  std::optional<double> t0;
  double sample_rate = kAccelRateHz;
  std::vector<double> ax, ay, az;
  std::vector<double> depth;
  std::vector<DivePhase> phase;
  std::vector<std::uint8_t> buzz;

  std::size_t size() const { return ax.size(); }
  double duration_s() const { return static_cast<double>(size()) / sample_rate; }

  void validate() const {
    const std::size_t n = ax.size();
    if (ay.size() != n || az.size() != n || depth.size() != n || phase.size() != n || buzz.size() != n)
      throw AlignmentError("WhaleRecord '" + whale_id + "': per-sample sequences differ in length");
    for (std::size_t i = 0; i < n; ++i) {
      if (!std::isfinite(ax[i]) || !std::isfinite(ay[i]) || !std::isfinite(az[i]) || !std::isfinite(depth[i]))
        throw ValidationError("WhaleRecord '" + whale_id + "': non-finite value at sample " + std::to_string(i));
      if (depth[i] < -1.0)
        throw ValidationError("WhaleRecord '" + whale_id + "': depth below -1 m at sample " + std::to_string(i));
      if (buzz[i] > 1)
        throw ValidationError("WhaleRecord '" + whale_id + "': non-binary buzz label at sample " + std::to_string(i));
      if (static_cast<unsigned>(phase[i]) > 3)
        throw ValidationError("WhaleRecord '" + whale_id + "': invalid phase at sample " + std::to_string(i));
    }
  }

  friend bool operator==(const WhaleRecord&, const WhaleRecord&) = default;
};

namespace detail {

inline void check_slack(std::size_t len10, std::size_t target_len, const char* what) {
  const auto expected = static_cast<long long>(kUpsampleFactor * len10);
  const auto diff = static_cast<long long>(target_len) - expected;
  if (diff > static_cast<long long>(kUpsampleFactor) || diff < -static_cast<long long>(kUpsampleFactor))
    throw AlignmentError(std::string(what) + ": " + std::to_string(len10) + " samples at 10 Hz cannot cover " +
                         std::to_string(target_len) + " samples at 100 Hz");
}

}  // namespace detail

/// Linear interpolation of a 10 Hz depth trace onto target_len 100 Hz samples.
/// Sample i sits at 10 Hz position i/10; positions past the last source sample hold it.
inline std::vector<double> resample_depth(std::span<const double> depth_10hz, std::size_t target_len) {
  if (depth_10hz.empty()) throw AlignmentError("resample_depth: empty depth series");
  detail::check_slack(depth_10hz.size(), target_len, "resample_depth");
  std::vector<double> out(target_len);
  const std::size_t last = depth_10hz.size() - 1;
  for (std::size_t i = 0; i < target_len; ++i) {
    const std::size_t k = i / kUpsampleFactor;
    const std::size_t r = i % kUpsampleFactor;
    if (k >= last) {
      out[i] = depth_10hz[last];
    } else if (r == 0) {
      out[i] = depth_10hz[k];
    } else {
      const double f = static_cast<double>(r) / static_cast<double>(kUpsampleFactor);
      out[i] = depth_10hz[k] + f * (depth_10hz[k + 1] - depth_10hz[k]);
    }
  }
  return out;
}

/// Repeat each 10 Hz label ten times; trailing slack holds the last label.
inline std::vector<std::uint8_t> expand_buzz_labels(std::span<const std::uint8_t> buzz_10hz, std::size_t target_len) {
  if (buzz_10hz.empty()) {
    if (target_len > kUpsampleFactor) throw AlignmentError("expand_buzz_labels: empty label series");
    return std::vector<std::uint8_t>(target_len, 0);
  }
  for (std::size_t i = 0; i < buzz_10hz.size(); ++i)
    if (buzz_10hz[i] > 1)
      throw ValidationError("expand_buzz_labels: non-binary label at index " + std::to_string(i));
  detail::check_slack(buzz_10hz.size(), target_len, "expand_buzz_labels");
  std::vector<std::uint8_t> out(target_len);
  const std::size_t last = buzz_10hz.size() - 1;
  for (std::size_t i = 0; i < target_len; ++i) out[i] = buzz_10hz[std::min(i / kUpsampleFactor, last)];
  return out;
}

/// Checks that intervals are sorted, non-overlapping and inside [0, duration_s].
inline void validate_intervals(std::span<const TimeInterval> iv, double duration_s) {
  for (std::size_t i = 0; i < iv.size(); ++i) {
    const auto& a = iv[i];
    if (!(a.start_s >= 0.0) || !(a.start_s < a.end_s) || a.end_s > duration_s + 1e-9)
      throw ValidationError("buzz interval " + std::to_string(i) + " is empty or outside the record");
    if (i > 0 && a.start_s < iv[i - 1].end_s)
      throw ValidationError("buzz intervals " + std::to_string(i - 1) + " and " + std::to_string(i) +
                            " overlap or are unsorted");
  }
}

/// Sample index of time t at the given rate, rounding up so that a sample
/// belongs to [start, end) iff its left edge lies inside.
inline std::size_t time_to_index_ceil(double t, double rate) {
  const double x = t * rate;
  const double r = std::round(x);
  const double v = std::abs(x - r) < 1e-6 ? r : std::ceil(x);
  return v <= 0.0 ? 0 : static_cast<std::size_t>(v);
}

inline std::vector<std::uint8_t> rasterize_intervals(std::span<const TimeInterval> iv, std::size_t n,
                                                     double rate = kAccelRateHz) {
  validate_intervals(iv, static_cast<double>(n) / rate);
  std::vector<std::uint8_t> out(n, 0);
  for (const auto& a : iv) {
    const std::size_t s = std::min(n, time_to_index_ceil(a.start_s, rate));
    const std::size_t e = std::min(n, time_to_index_ceil(a.end_s, rate));
    std::fill(out.begin() + static_cast<std::ptrdiff_t>(s), out.begin() + static_cast<std::ptrdiff_t>(e), 1);
  }
  return out;
}

/// Drops the first `seconds` of raw channels; buzz intervals are shifted and clipped.
inline RawChannels skip_leading(const RawChannels& raw, double seconds) {
  if (!(seconds >= 0.0)) throw ConfigError("skip_leading: duration must be >= 0");
  if (seconds == 0.0) return raw;
  const auto na = static_cast<std::size_t>(std::llround(seconds * kAccelRateHz));
  const auto nd = static_cast<std::size_t>(std::llround(seconds * kDepthRateHz));
  if (na >= raw.accel_x.size() || nd >= raw.depth.size())
    throw ValidationError("skip_leading: skipping " + std::to_string(seconds) + " s leaves no data");
  auto drop = [](const auto& v, std::size_t k) { return std::decay_t<decltype(v)>(v.begin() + k, v.end()); };
  RawChannels out;
  out.whale_id = raw.whale_id;
  out.accel_x = drop(raw.accel_x, na);
  out.accel_y = drop(raw.accel_y, na);
  out.accel_z = drop(raw.accel_z, na);
  out.depth = drop(raw.depth, nd);
  if (const auto* seq = std::get_if<BuzzLabels10Hz>(&raw.buzz)) {
    out.buzz = drop(*seq, std::min(nd, seq->size()));
  } else {
    BuzzIntervals iv;
    for (const auto& a : std::get<BuzzIntervals>(raw.buzz))
      if (a.end_s > seconds) iv.push_back({std::max(0.0, a.start_s - seconds), a.end_s - seconds});
    out.buzz = std::move(iv);
  }
  return out;
}

/// Assemble the aligned 100 Hz record: depth upsampled, buzz expanded or
/// rasterized, phases annotated from the resampled depth.
inline WhaleRecord build_record(const RawChannels& raw, const DiveOptions& dive_opt = {}) {
  const std::size_t n = raw.accel_x.size();
  if (raw.accel_y.size() != n || raw.accel_z.size() != n)
    throw AlignmentError("build_record: accel axes differ in length");
  WhaleRecord rec;
  rec.whale_id = raw.whale_id;
  rec.ax = raw.accel_x;
  rec.ay = raw.accel_y;
  rec.az = raw.accel_z;
  rec.depth = resample_depth(raw.depth, n);
  if (const auto* seq = std::get_if<BuzzLabels10Hz>(&raw.buzz)) {
    if (seq->size() != raw.depth.size())
      throw AlignmentError("build_record: buzz and depth series differ in length");
    rec.buzz = expand_buzz_labels(*seq, n);
  } else {
    rec.buzz = rasterize_intervals(std::get<BuzzIntervals>(raw.buzz), n);
  }
  rec.phase = annotate_phases(rec.depth, dive_opt);
  rec.validate();
  return rec;
}

/// Fraction of samples labelled as buzz.
inline double positive_rate(std::span<const std::uint8_t> buzz) {
  if (buzz.empty()) throw ValidationError("positive_rate: empty label sequence");
  std::size_t s = 0;
  for (auto b : buzz) s += b;
  return static_cast<double>(s) / static_cast<double>(buzz.size());
}

/// Copy of samples [begin, end) of a record.
inline WhaleRecord slice(const WhaleRecord& r, std::size_t begin, std::size_t end) {
  end = std::min(end, r.size());
  begin = std::min(begin, end);
  auto cut = [&](const auto& v) { return std::decay_t<decltype(v)>(v.begin() + begin, v.begin() + end); };
  WhaleRecord out;
  out.whale_id = r.whale_id;
  if (r.t0) out.t0 = *r.t0 + static_cast<double>(begin) / r.sample_rate;
  out.sample_rate = r.sample_rate;
  out.ax = cut(r.ax);
  out.ay = cut(r.ay);
  out.az = cut(r.az);
  out.depth = cut(r.depth);
  out.phase = cut(r.phase);
  out.buzz = cut(r.buzz);
  return out;
}

}  // namespace buzzdet
