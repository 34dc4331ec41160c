#pragma once

// Text formats of the pipeline's outputs. Doubles use the shortest
// round-trip form; undefined ratios are written as empty CSV fields and
// JSON null.

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "buzzdet/dives.hpp"
#include "buzzdet/error.hpp"
#include "buzzdet/eval.hpp"
#include "buzzdet/io.hpp"
#include "buzzdet/jerk.hpp"
#include "buzzdet/models/unet.hpp"

namespace buzzdet::io {

inline std::string fmt_optional(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

// Raw channel CSVs in the ingestion formats.

inline std::string format_accel_csv(const WhaleRecord& r) {
  std::string out = "idx,ax_mG,ay_mG,az_mG\n";
  for (std::size_t i = 0; i < r.size(); ++i)
    out += std::to_string(i) + ',' + fmt_double(r.ax[i]) + ',' + fmt_double(r.ay[i]) + ',' + fmt_double(r.az[i]) + '\n';
  return out;
}

/// Depth at 10 Hz: every tenth 100 Hz sample.
inline std::string format_depth_csv(const WhaleRecord& r) {
  std::string out = "idx,depth_m\n";
  for (std::size_t i = 0, k = 0; i < r.size(); i += kUpsampleFactor, ++k)
    out += std::to_string(k) + ',' + fmt_double(r.depth[i]) + '\n';
  return out;
}

inline std::string format_buzz_intervals_csv(const BuzzIntervals& iv) {
  std::string out = "start_s,end_s\n";
  for (const auto& a : iv) out += fmt_double(a.start_s) + ',' + fmt_double(a.end_s) + '\n';
  return out;
}

inline std::string format_dives_csv(const std::vector<Dive>& dives, double rate_hz = kAccelRateHz) {
  std::ostringstream os;
  os << "dive_id,start_s,end_s,max_depth_m,bottom_start_s,bottom_end_s\n";
  for (std::size_t i = 0; i < dives.size(); ++i) {
    const auto& d = dives[i];
    auto sec = [&](std::size_t idx) { return fmt_double(static_cast<double>(idx) / rate_hz); };
    os << i << ',' << sec(d.start_idx) << ',' << sec(d.end_idx) << ',' << fmt_double(d.max_depth_m) << ','
       << sec(d.bottom_start_idx) << ',' << sec(d.bottom_end_idx) << '\n';
  }
  return os.str();
}

inline std::string format_trace_csv(const std::vector<models::EpochStats>& trace) {
  std::ostringstream os;
  os << "epoch,train_dice,val_dice\n";
  for (const auto& e : trace) os << e.epoch << ',' << fmt_double(e.train_dice) << ',' << fmt_double(e.val_dice) << '\n';
  return os.str();
}

/// Per-sample predictions: `idx,prob,label`.
inline std::string format_predictions_csv(const std::vector<double>& prob, const std::vector<std::uint8_t>& label) {
  if (prob.size() != label.size()) throw ShapeError("format_predictions_csv: length mismatch");
  std::string out = "idx,prob,label\n";
  out.reserve(prob.size() * 24);
  for (std::size_t i = 0; i < prob.size(); ++i) {
    out += std::to_string(i);
    out += ',';
    out += fmt_double(prob[i]);
    out += label[i] ? ",1\n" : ",0\n";
  }
  return out;
}

struct PredictionColumns {
  std::vector<double> prob;
  std::vector<std::uint8_t> label;
};

inline PredictionColumns read_predictions_csv(const std::string& path) {
  const auto t = read_csv(path);
  expect_header(t, {"idx", "prob", "label"});
  PredictionColumns out;
  out.prob.reserve(t.rows.size());
  out.label.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    check_index(t, r);
    const auto where = t.where(r);
    const double p = parse_double(t.rows[r][1], where);
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(where + ": probability outside [0, 1]");
    const auto l = parse_int(t.rows[r][2], where);
    if (l != 0 && l != 1) throw ValidationError(where + ": label must be 0 or 1");
    out.prob.push_back(p);
    out.label.push_back(static_cast<std::uint8_t>(l));
  }
  return out;
}

inline std::string format_match_csv(const eval::MatchReport& rep) {
  std::ostringstream os;
  os << "criterion,matched,total,proportion\n";
  for (const auto& c : rep.criteria)
    os << c.name() << ',' << c.matched << ',' << c.total << ',' << fmt_optional(c.proportion) << '\n';
  return os.str();
}

inline std::string format_dive_report_csv(const eval::DiveReport& rep) {
  std::ostringstream os;
  os << "dive_id,truth_count,pred_count,truth_secs,pred_secs\n";
  for (const auto& r : rep.dives)
    os << r.dive_id << ',' << r.truth_count << ',' << r.pred_count << ',' << fmt_double(r.truth_secs) << ','
       << fmt_double(r.pred_secs) << '\n';
  return os.str();
}

inline std::string format_confusion_json(const eval::Confusion& c) {
  auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string("null"); };
  std::ostringstream os;
  os << "{\n  \"tn\": " << c.tn << ",\n  \"fp\": " << c.fp << ",\n  \"fn\": " << c.fn << ",\n  \"tp\": " << c.tp
     << ",\n  \"precision\": " << opt(c.precision) << ",\n  \"recall\": " << opt(c.recall) << "\n}\n";
  return os.str();
}

inline std::string format_differences_csv(const std::vector<eval::DiveDifference>& diffs) {
  std::ostringstream os;
  os << "dive_id,count_diff,secs_diff\n";
  for (const auto& d : diffs) os << d.dive_id << ',' << d.count_diff << ',' << fmt_double(d.secs_diff) << '\n';
  return os.str();
}

inline std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "threshold_mGps,delay_s,tp,fp,fn,tn,precision,recall\n";
  for (const auto& r : rows)
    os << fmt_double(r.threshold) << ',' << fmt_double(r.delay_s) << ',' << r.tp << ',' << r.fp << ',' << r.fn << ','
       << r.tn << ',' << fmt_optional(r.precision) << ',' << fmt_optional(r.recall) << '\n';
  return os.str();
}

}  // namespace buzzdet::io
