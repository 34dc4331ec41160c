#pragma once

// Feature table CSV. Header:
//   w_idx,start_s,<26 feature names>,phase_surface,phase_descent,phase_bottom,phase_ascent,label
// Values are written in shortest round-trip form, so read(write(t)) == t.

#include <sstream>
#include <string>
#include <vector>

#include "buzzdet/features.hpp"
#include "buzzdet/io.hpp"

namespace buzzdet::io {

inline std::vector<std::string> feature_csv_header() {
  std::vector<std::string> h = {"w_idx", "start_s"};
  for (const auto& n : feature_names()) h.push_back(n);
  for (const auto& n : phase_column_names()) h.push_back(n);
  h.push_back("label");
  return h;
}

inline std::string format_feature_csv(const FeatureTable& t) {
  std::ostringstream os;
  const auto h = feature_csv_header();
  for (std::size_t i = 0; i < h.size(); ++i) os << (i ? "," : "") << h[i];
  os << '\n';
  for (const auto& r : t.rows) {
    os << r.w_idx << ',' << fmt_double(r.start_s);
    for (double v : r.values) os << ',' << fmt_double(v);
    for (auto p : r.phase) os << ',' << static_cast<int>(p);
    os << ',' << static_cast<int>(r.label) << '\n';
  }
  return os.str();
}

inline void write_feature_csv(const FeatureTable& t, const std::string& path) {
  write_file(path, format_feature_csv(t));
}

inline FeatureTable read_feature_csv(const std::string& path) {
  const auto csv = read_csv(path);
  expect_header(csv, feature_csv_header());
  FeatureTable t;
  t.whale_id = path;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& c = csv.rows[r];
    const auto where = csv.where(r);
    FeatureRow row;
    row.w_idx = static_cast<std::size_t>(parse_int(c[0], where));
    row.start_s = parse_double(c[1], where);
    for (std::size_t k = 0; k < kNumRealFeatures; ++k) row.values[k] = parse_double(c[2 + k], where);
    int hot = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const auto v = parse_int(c[2 + kNumRealFeatures + k], where);
      if (v != 0 && v != 1) throw ValidationError(where + ": phase columns must be 0 or 1");
      row.phase[k] = static_cast<std::uint8_t>(v);
      hot += static_cast<int>(v);
    }
    if (hot != 1) throw ValidationError(where + ": exactly one phase column must be 1");
    const auto lab = parse_int(c.back(), where);
    if (lab != 0 && lab != 1) throw ValidationError(where + ": label must be 0 or 1");
    row.label = static_cast<std::uint8_t>(lab);
    t.rows.push_back(row);
  }
  return t;
}

}  // namespace buzzdet::io
