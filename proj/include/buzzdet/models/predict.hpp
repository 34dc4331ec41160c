#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "buzzdet/error.hpp"
#include "buzzdet/features.hpp"
#include "buzzdet/models/dataset.hpp"
#include "buzzdet/models/forest.hpp"
#include "buzzdet/models/logistic.hpp"
#include "buzzdet/models/unet_data.hpp"
#include "buzzdet/record.hpp"

namespace buzzdet::models {

using AnyModel = std::variant<LogisticModel, ForestModel, UNetModel>;

inline std::string_view model_kind_name(const AnyModel& m) {
  switch (m.index()) {
    case 0: return "logreg";
    case 1: return "forest";
    default: return "unet";
  }
}

inline constexpr double kDecisionThreshold = 0.5;

/// Label rule: strictly above the threshold.
inline std::vector<std::uint8_t> binarize(std::span<const double> prob, double threshold = kDecisionThreshold) {
  std::vector<std::uint8_t> out(prob.size());
  for (std::size_t i = 0; i < prob.size(); ++i) out[i] = prob[i] > threshold ? 1 : 0;
  return out;
}

/// Paints each window's span with its label, combining overlaps by logical OR.
inline std::vector<std::uint8_t> expand_window_labels(std::span<const std::uint8_t> window_labels,
                                                      const WindowSpec& spec, std::size_t n_samples) {
  std::vector<std::uint8_t> out(n_samples, 0);
  for (std::size_t w = 0; w < window_labels.size(); ++w) {
    if (!window_labels[w]) continue;
    const std::size_t s = w * spec.stride, e = std::min(n_samples, s + spec.size);
    for (std::size_t i = s; i < e; ++i) out[i] = 1;
  }
  return out;
}

/// Per-sample probability from window probabilities: max over covering
/// windows, so thresholding it reproduces the OR of window labels.
inline std::vector<double> expand_window_probs(std::span<const double> window_probs, const WindowSpec& spec,
                                               std::size_t n_samples) {
  std::vector<double> out(n_samples, 0.0);
  for (std::size_t w = 0; w < window_probs.size(); ++w) {
    const std::size_t s = w * spec.stride, e = std::min(n_samples, s + spec.size);
    for (std::size_t i = s; i < e; ++i) out[i] = std::max(out[i], window_probs[w]);
  }
  return out;
}

inline std::vector<double> predict_windows(const AnyModel& m, const FeatureTable& t) {
  std::vector<double> p;
  p.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    const auto row = model_row(r);
    if (const auto* lr = std::get_if<LogisticModel>(&m)) p.push_back(lr->predict_proba(row));
    else if (const auto* rf = std::get_if<ForestModel>(&m)) p.push_back(rf->predict_proba(row));
    else throw ValidationError("predict_windows: the U-Net consumes raw series, not feature tables");
  }
  return p;
}

struct SamplePrediction {
  std::vector<double> prob;
  std::vector<std::uint8_t> label;
};

/// Per-sample probabilities and labels for a whole record, for any model kind.
inline SamplePrediction predict_record(const AnyModel& m, const WhaleRecord& r, const WindowSpec& spec = {}) {
  SamplePrediction out;
  if (const auto* un = std::get_if<UNetModel>(&m)) {
    out.prob = unet_predict_record(*un, r);
    out.label = binarize(out.prob);
    return out;
  }
  const auto table = featurize(r, spec);
  const auto wp = predict_windows(m, table);
  const auto wl = binarize(wp);
  out.prob = expand_window_probs(wp, spec, r.size());
  out.label = expand_window_labels(wl, spec, r.size());
  return out;
}

}  // namespace buzzdet::models
