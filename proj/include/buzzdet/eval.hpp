#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "buzzdet/dives.hpp"
#include "buzzdet/error.hpp"
#include "buzzdet/record.hpp"

namespace buzzdet::eval {

// Event times are sample-grid values in seconds; criterion comparisons
// absorb rounding of that grid with this slack.
inline constexpr double kTimeSlack = 1e-9;

enum class EventSource : std::uint8_t { Truth, Prediction };

struct EventInterval {
  double start_s = 0.0;
  double end_s = 0.0;  // exclusive
  EventSource source = EventSource::Truth;

  double length() const { return end_s - start_s; }
  double midpoint() const { return 0.5 * (start_s + end_s); }
  friend bool operator==(const EventInterval&, const EventInterval&) = default;
};

/// Maximal runs of ones as half-open intervals; runs shorter than `min_len_s` are dropped.
inline std::vector<EventInterval> extract_events(std::span<const std::uint8_t> labels, double rate_hz = kAccelRateHz,
                                                 EventSource source = EventSource::Truth, double min_len_s = 0.0) {
  std::vector<EventInterval> out;
  std::size_t i = 0;
  while (i < labels.size()) {
    if (!labels[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < labels.size() && labels[j]) ++j;
    EventInterval e{static_cast<double>(i) / rate_hz, static_cast<double>(j) / rate_hz, source};
    if (e.length() >= min_len_s) out.push_back(e);
    i = j;
  }
  return out;
}

inline void validate_events(std::span<const EventInterval> ev, const char* who) {
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (!(ev[i].start_s < ev[i].end_s)) throw ValidationError(std::string(who) + ": event with start >= end");
    if (i > 0 && ev[i].start_s < ev[i - 1].end_s)
      throw ValidationError(std::string(who) + ": events must be sorted and non-overlapping");
  }
}

/// Gap between two intervals; 0 when they overlap or touch.
inline double interval_distance(const EventInterval& a, const EventInterval& b) {
  return std::max(0.0, std::max(a.start_s, b.start_s) - std::min(a.end_s, b.end_s));
}

inline double intersection(const EventInterval& a, const EventInterval& b) {
  return std::max(0.0, std::min(a.end_s, b.end_s) - std::max(a.start_s, b.start_s));
}

enum class OverlapMode { TruthFraction, IoU };

/// |pred ∩ truth| / |truth|, or intersection over union in IoU mode.
inline double overlap_fraction(const EventInterval& pred, const EventInterval& truth,
                               OverlapMode mode = OverlapMode::TruthFraction) {
  const double inter = intersection(pred, truth);
  if (mode == OverlapMode::IoU) return inter / (pred.length() + truth.length() - inter);
  return inter / truth.length();
}

struct MatchOptions {
  std::vector<double> overlap_thresholds{0.25, 0.5, 0.75, 1.0};
  std::vector<double> distances_s{0.1, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0};
  OverlapMode overlap_mode = OverlapMode::TruthFraction;
};

enum class CriterionKind { Overlap, Distance };

struct CriterionResult {
  CriterionKind kind = CriterionKind::Overlap;
  double value = 0.0;
  std::size_t matched = 0, total = 0;
  std::optional<double> proportion;  // empty when total == 0

  std::string name() const;
};

inline std::string fmt_criterion_value(double v) {
  std::string s = std::to_string(v);
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

inline std::string CriterionResult::name() const {
  return (kind == CriterionKind::Overlap ? "overlap>=" : "distance<") + fmt_criterion_value(value);
}

struct MatchReport {
  std::vector<CriterionResult> criteria;

  const CriterionResult* find(CriterionKind kind, double value) const {
    for (const auto& c : criteria)
      if (c.kind == kind && c.value == value) return &c;
    return nullptr;
  }
};

namespace detail {

// Best single-prediction overlap for each truth event.
inline std::vector<double> best_overlaps(std::span<const EventInterval> preds, std::span<const EventInterval> truths,
                                         OverlapMode mode) {
  std::vector<double> best(truths.size(), 0.0);
  std::size_t lo = 0;
  for (std::size_t t = 0; t < truths.size(); ++t) {
    while (lo < preds.size() && preds[lo].end_s <= truths[t].start_s) ++lo;
    for (std::size_t p = lo; p < preds.size() && preds[p].start_s < truths[t].end_s; ++p)
      best[t] = std::max(best[t], overlap_fraction(preds[p], truths[t], mode));
  }
  return best;
}

// Distance from each prediction to its nearest truth event.
inline std::vector<double> nearest_distances(std::span<const EventInterval> preds,
                                             std::span<const EventInterval> truths) {
  std::vector<double> out(preds.size(), std::numeric_limits<double>::infinity());
  for (std::size_t p = 0; p < preds.size(); ++p) {
    auto it = std::lower_bound(truths.begin(), truths.end(), preds[p].start_s,
                               [](const EventInterval& t, double s) { return t.end_s < s; });
    // Truth events are disjoint and sorted, so the nearest is adjacent to the insertion point.
    if (it != truths.end()) {
      out[p] = std::min(out[p], interval_distance(preds[p], *it));
      if (it + 1 != truths.end()) out[p] = std::min(out[p], interval_distance(preds[p], *(it + 1)));
    }
    if (it != truths.begin()) out[p] = std::min(out[p], interval_distance(preds[p], *(it - 1)));
  }
  return out;
}

}  // namespace detail

/// Overlap criteria count truths that some single prediction covers by at
/// least θ; distance criteria count predictions whose nearest truth is closer
/// than d.
inline MatchReport match_report(std::span<const EventInterval> preds, std::span<const EventInterval> truths,
                                const MatchOptions& opt = {}) {
  validate_events(preds, "match_report (predictions)");
  validate_events(truths, "match_report (truths)");
  MatchReport rep;
  const auto best = detail::best_overlaps(preds, truths, opt.overlap_mode);
  for (double th : opt.overlap_thresholds) {
    CriterionResult c{CriterionKind::Overlap, th, 0, truths.size(), std::nullopt};
    for (double b : best) c.matched += b >= th - kTimeSlack ? 1 : 0;
    if (c.total > 0) c.proportion = static_cast<double>(c.matched) / static_cast<double>(c.total);
    rep.criteria.push_back(c);
  }
  const auto dist = detail::nearest_distances(preds, truths);
  for (double d : opt.distances_s) {
    CriterionResult c{CriterionKind::Distance, d, 0, preds.size(), std::nullopt};
    for (double x : dist) c.matched += x < d - kTimeSlack ? 1 : 0;
    if (c.total > 0) c.proportion = static_cast<double>(c.matched) / static_cast<double>(c.total);
    rep.criteria.push_back(c);
  }
  return rep;
}

struct DiveRow {
  std::size_t dive_id = 0;
  std::size_t truth_count = 0, pred_count = 0;
  double truth_secs = 0.0, pred_secs = 0.0;
  friend bool operator==(const DiveRow&, const DiveRow&) = default;
};

struct Confusion {
  std::size_t tn = 0, fp = 0, fn = 0, tp = 0;
  std::optional<double> precision, recall;
  std::size_t total() const { return tn + fp + fn + tp; }
};

struct DiveReport {
  std::vector<DiveRow> dives;
  DiveRow surface;  // events whose midpoint lies outside every dive
  Confusion confusion;
};

inline void finish_confusion(Confusion& c) {
  c.precision.reset();
  c.recall.reset();
  if (c.tp + c.fp > 0) c.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) c.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

/// Sums matched/total per criterion; reports must share the same criteria.
inline MatchReport merge_match_reports(std::span<const MatchReport> reps) {
  MatchReport out;
  if (reps.empty()) return out;
  out.criteria = reps.front().criteria;
  for (auto& c : out.criteria) c.matched = c.total = 0;
  for (const auto& r : reps) {
    if (r.criteria.size() != out.criteria.size()) throw ValidationError("merge_match_reports: criteria differ");
    for (std::size_t i = 0; i < r.criteria.size(); ++i) {
      if (r.criteria[i].kind != out.criteria[i].kind || r.criteria[i].value != out.criteria[i].value)
        throw ValidationError("merge_match_reports: criteria differ");
      out.criteria[i].matched += r.criteria[i].matched;
      out.criteria[i].total += r.criteria[i].total;
    }
  }
  for (auto& c : out.criteria) {
    c.proportion.reset();
    if (c.total > 0) c.proportion = static_cast<double>(c.matched) / static_cast<double>(c.total);
  }
  return out;
}

/// Concatenates dive rows (renumbered in order) and pools the confusion counts.
inline DiveReport merge_dive_reports(std::span<const DiveReport> reps) {
  DiveReport out;
  for (const auto& r : reps) {
    for (auto row : r.dives) {
      row.dive_id = out.dives.size();
      out.dives.push_back(row);
    }
    out.surface.truth_count += r.surface.truth_count;
    out.surface.pred_count += r.surface.pred_count;
    out.surface.truth_secs += r.surface.truth_secs;
    out.surface.pred_secs += r.surface.pred_secs;
    out.confusion.tn += r.confusion.tn;
    out.confusion.fp += r.confusion.fp;
    out.confusion.fn += r.confusion.fn;
    out.confusion.tp += r.confusion.tp;
  }
  finish_confusion(out.confusion);
  return out;
}

/// Index of the dive whose [start, end) span holds time `t`, or -1. Event
/// midpoints lie on the half-sample grid, so `t` is snapped to it first.
inline std::ptrdiff_t dive_containing(std::span<const Dive> dives, double t, double rate_hz) {
  double x = t * rate_hz;
  const double half = std::round(2.0 * x) / 2.0;
  if (std::abs(x - half) < 1e-6) x = half;
  auto it = std::upper_bound(dives.begin(), dives.end(), x,
                             [](double v, const Dive& d) { return v < static_cast<double>(d.start_idx); });
  if (it == dives.begin()) return -1;
  --it;
  return x < static_cast<double>(it->end_idx) ? it - dives.begin() : -1;
}

inline DiveReport dive_report(std::span<const Dive> dives, std::span<const EventInterval> preds,
                              std::span<const EventInterval> truths, double rate_hz = kAccelRateHz) {
  DiveReport rep;
  rep.dives.resize(dives.size());
  for (std::size_t i = 0; i < dives.size(); ++i) rep.dives[i].dive_id = i;
  auto bucket = [&](double t) -> DiveRow& {
    const auto k = dive_containing(dives, t, rate_hz);
    return k < 0 ? rep.surface : rep.dives[static_cast<std::size_t>(k)];
  };
  for (const auto& e : truths) {
    auto& row = bucket(e.midpoint());
    ++row.truth_count;
    row.truth_secs += e.length();
  }
  for (const auto& e : preds) {
    auto& row = bucket(e.midpoint());
    ++row.pred_count;
    row.pred_secs += e.length();
  }
  auto& c = rep.confusion;
  for (const auto& r : rep.dives) {
    const bool truth = r.truth_count > 0, pred = r.pred_count > 0;
    if (truth && pred) ++c.tp;
    else if (pred) ++c.fp;
    else if (truth) ++c.fn;
    else ++c.tn;
  }
  finish_confusion(c);
  return rep;
}

struct DiveDifference {
  std::size_t dive_id = 0;
  long long count_diff = 0;  // predicted minus truth
  double secs_diff = 0.0;
};

inline std::vector<DiveDifference> difference_histograms(const DiveReport& rep) {
  std::vector<DiveDifference> out;
  out.reserve(rep.dives.size());
  for (const auto& r : rep.dives)
    out.push_back({r.dive_id, static_cast<long long>(r.pred_count) - static_cast<long long>(r.truth_count),
                   r.pred_secs - r.truth_secs});
  return out;
}

}  // namespace buzzdet::eval
