#pragma once

// Record-level plumbing for the U-Net: channel normalisation, cutting split
// partitions into fixed-length segments, and full-record inference.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "buzzdet/error.hpp"
#include "buzzdet/models/split.hpp"
#include "buzzdet/models/unet.hpp"
#include "buzzdet/record.hpp"

namespace buzzdet::models {

/// Per-channel z-score statistics (ax, ay, az, depth) from training data.
struct Normalizer {
  std::array<double, 4> mean{0, 0, 0, 0};
  std::array<double, 4> std{1, 1, 1, 1};
  friend bool operator==(const Normalizer&, const Normalizer&) = default;
};

struct UNetModel {
  UNet net;
  Normalizer norm;
  friend bool operator==(const UNetModel&, const UNetModel&) = default;
};

namespace detail {

inline std::array<const std::vector<double>*, 4> channels_of(const WhaleRecord& r) {
  return {&r.ax, &r.ay, &r.az, &r.depth};
}

}  // namespace detail

/// Mean and population STD of each input channel over the train parts of a fold.
inline Normalizer fit_normalizer(const std::vector<WhaleRecord>& records, const Fold& fold) {
  Normalizer nz;
  std::array<double, 4> sum{}, sq{};
  double count = 0.0;
  for (const auto& a : fold.of(Part::Train)) {
    const auto ch = detail::channels_of(records[a.whale]);
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = a.begin; i < a.end; ++i) sum[c] += (*ch[c])[i];
    count += static_cast<double>(a.size());
  }
  if (count == 0.0) throw ConfigError("fit_normalizer: no training samples");
  for (std::size_t c = 0; c < 4; ++c) nz.mean[c] = sum[c] / count;
  for (const auto& a : fold.of(Part::Train)) {
    const auto ch = detail::channels_of(records[a.whale]);
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = a.begin; i < a.end; ++i) {
        const double d = (*ch[c])[i] - nz.mean[c];
        sq[c] += d * d;
      }
  }
  for (std::size_t c = 0; c < 4; ++c) {
    const double s = std::sqrt(sq[c] / count);
    nz.std[c] = s > 0.0 ? s : 1.0;
  }
  return nz;
}

inline Segment make_segment(const WhaleRecord& r, std::size_t begin, std::size_t length, const Normalizer& nz) {
  Segment s;
  s.x.resize(4 * length);
  const auto ch = detail::channels_of(r);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t i = 0; i < length; ++i) s.x[c * length + i] = ((*ch[c])[begin + i] - nz.mean[c]) / nz.std[c];
  s.y.assign(r.buzz.begin() + static_cast<std::ptrdiff_t>(begin),
             r.buzz.begin() + static_cast<std::ptrdiff_t>(begin + length));
  return s;
}

/// Non-overlapping segments on each whale's global grid that lie entirely in `part`.
inline SegmentSet make_segments(const std::vector<WhaleRecord>& records, const Fold& fold, Part part,
                                std::size_t length, const Normalizer& nz) {
  SegmentSet set;
  set.length = length;
  for (std::size_t w = 0; w < records.size(); ++w) {
    const auto tiles = assign_tiles(fold, w, records[w].size(), length, length);
    for (std::size_t k = 0; k < tiles.size(); ++k)
      if (tiles[k] && *tiles[k] == part) set.items.push_back(make_segment(records[w], k * length, length, nz));
  }
  return set;
}

/// Per-sample probabilities for a whole record. The record is cut into
/// segment-length chunks; the tail is covered by one chunk aligned to the end,
/// and records shorter than a segment are zero-padded (in normalised units).
inline std::vector<double> unet_predict_record(const UNetModel& m, const WhaleRecord& r, std::size_t batch = 16) {
  const std::size_t len = m.net.config().segment_length;
  const std::size_t n = r.size();
  std::vector<double> prob(n, 0.0);
  if (n == 0) return prob;
  std::vector<std::size_t> starts;
  if (n <= len) {
    starts.push_back(0);
  } else {
    for (std::size_t s = 0; s + len <= n; s += len) starts.push_back(s);
    if (starts.back() + len < n) starts.push_back(n - len);
  }
  const auto ch = detail::channels_of(r);
  for (std::size_t b = 0; b < starts.size(); b += batch) {
    const std::size_t nb = std::min(batch, starts.size() - b);
    nn::Tensor3 x(nb, 4, len);
    for (std::size_t j = 0; j < nb; ++j)
      for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t i = 0; i < len && starts[b + j] + i < n; ++i)
          x(j, c, i) = ((*ch[c])[starts[b + j] + i] - m.norm.mean[c]) / m.norm.std[c];
    const auto p = m.net.forward(x);
    for (std::size_t j = 0; j < nb; ++j)
      for (std::size_t i = 0; i < len && starts[b + j] + i < n; ++i) prob[starts[b + j] + i] = p(j, 0, i);
  }
  return prob;
}

}  // namespace buzzdet::models
