#pragma once

// End-to-end helpers shared by the CLI and the acceptance suite: building
// tabular training sets from split parts, training any model kind, and
// evaluating per-sample predictions on one part of a split.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "buzzdet/dives.hpp"
#include "buzzdet/error.hpp"
#include "buzzdet/eval.hpp"
#include "buzzdet/features.hpp"
#include "buzzdet/models/checkpoint.hpp"
#include "buzzdet/models/predict.hpp"
#include "buzzdet/models/split.hpp"
#include "buzzdet/record.hpp"

namespace buzzdet::pipeline {

using models::ModelKind;

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "logreg") return ModelKind::LogReg;
  if (s == "forest") return ModelKind::Forest;
  if (s == "unet") return ModelKind::UNet;
  throw ConfigError("unknown model kind '" + std::string(s) + "' (expected logreg, forest or unet)");
}

struct TrainSettings {
  models::LogRegConfig logreg;
  models::ForestConfig forest;
  models::UNetConfig unet;
  WindowSpec window;
  WindowPhaseRule phase_rule = WindowPhaseRule::Center;
};

/// Feature rows of every window lying entirely inside `part`; straddlers are dropped.
inline models::Dataset tabular_dataset(const std::vector<WhaleRecord>& records, const models::Fold& fold,
                                       models::Part part, const WindowSpec& window = {},
                                       WindowPhaseRule rule = WindowPhaseRule::Center) {
  models::Dataset d;
  d.cols = kNumRealFeatures + 4;
  for (std::size_t w = 0; w < records.size(); ++w) {
    const auto table = featurize(records[w], window, rule);
    const auto tiles = models::assign_tiles(fold, w, records[w].size(), window.size, window.stride);
    for (std::size_t k = 0; k < table.rows.size(); ++k)
      if (tiles[k] && *tiles[k] == part) d.push_row(models::model_row(table.rows[k]), table.rows[k].label);
  }
  return d;
}

struct TrainOutcome {
  models::AnyModel model;
  std::vector<models::EpochStats> trace;  // U-Net only
  std::size_t best_epoch = 0;
  std::size_t train_rows = 0;  // windows or segments used for fitting
};

inline TrainOutcome train(ModelKind kind, const std::vector<WhaleRecord>& records, const models::Fold& fold,
                          const TrainSettings& s, const models::EpochCallback& on_epoch = {}) {
  TrainOutcome out;
  if (kind == ModelKind::UNet) {
    const auto nz = models::fit_normalizer(records, fold);
    const auto tr = models::make_segments(records, fold, models::Part::Train, s.unet.segment_length, nz);
    const auto va = models::make_segments(records, fold, models::Part::Val, s.unet.segment_length, nz);
    out.train_rows = tr.size();
    auto res = models::unet_train(models::UNet(s.unet), tr, va, s.unet, on_epoch);
    out.trace = std::move(res.trace);
    out.best_epoch = res.best_epoch;
    out.model = models::UNetModel{std::move(res.model), nz};
    return out;
  }
  const auto data = tabular_dataset(records, fold, models::Part::Train, s.window, s.phase_rule);
  out.train_rows = data.rows;
  if (kind == ModelKind::LogReg) out.model = models::logreg_fit(data, s.logreg);
  else out.model = models::rf_fit(data, s.forest);
  return out;
}

/// Sample range of `part` for one whale, if the fold assigns it one.
inline std::optional<std::pair<std::size_t, std::size_t>> part_range(const models::Fold& fold, std::size_t whale,
                                                                     models::Part part) {
  for (const auto& a : fold.items)
    if (a.whale == whale && a.part == part) return std::make_pair(a.begin, a.end);
  return std::nullopt;
}

struct EvalSettings {
  eval::MatchOptions match;
  double min_event_s = 0.0;
  DiveOptions dives;
};

struct EvalResult {
  eval::MatchReport match;
  eval::DiveReport dives;
  std::vector<eval::DiveDifference> differences;
  std::size_t truth_events = 0, pred_events = 0;
};

/// One whale's sample range to evaluate, with predicted labels for the whole record.
struct EvalInput {
  const WhaleRecord* record = nullptr;
  const std::vector<std::uint8_t>* pred = nullptr;
  std::size_t begin = 0, end = 0;
};

/// Events are extracted inside [begin, end) of each record; dives are detected
/// on the full depth series and kept when they lie wholly inside the range.
inline EvalResult evaluate(const std::vector<EvalInput>& inputs, const EvalSettings& s = {}) {
  std::vector<eval::MatchReport> matches;
  std::vector<eval::DiveReport> dive_reps;
  EvalResult out;
  for (const auto& in : inputs) {
    const auto& r = *in.record;
    if (in.pred->size() != r.size())
      throw ShapeError("evaluate: prediction length " + std::to_string(in.pred->size()) + " does not match record '" +
                       r.whale_id + "' length " + std::to_string(r.size()));
    if (in.begin > in.end || in.end > r.size()) throw ShapeError("evaluate: range outside record");
    const std::span<const std::uint8_t> truth(r.buzz.data() + in.begin, in.end - in.begin);
    const std::span<const std::uint8_t> pred(in.pred->data() + in.begin, in.end - in.begin);
    const auto te = eval::extract_events(truth, r.sample_rate, eval::EventSource::Truth, s.min_event_s);
    const auto pe = eval::extract_events(pred, r.sample_rate, eval::EventSource::Prediction, s.min_event_s);
    out.truth_events += te.size();
    out.pred_events += pe.size();
    matches.push_back(eval::match_report(pe, te, s.match));
    std::vector<Dive> kept;
    for (auto d : detect_dives(r.depth, s.dives))
      if (d.start_idx >= in.begin && d.end_idx <= in.end) {
        d.start_idx -= in.begin;
        d.end_idx -= in.begin;
        d.bottom_start_idx -= in.begin;
        d.bottom_end_idx -= in.begin;
        kept.push_back(d);
      }
    dive_reps.push_back(eval::dive_report(kept, pe, te, r.sample_rate));
  }
  out.match = eval::merge_match_reports(matches);
  out.dives = eval::merge_dive_reports(dive_reps);
  out.differences = eval::difference_histograms(out.dives);
  return out;
}

}  // namespace buzzdet::pipeline
