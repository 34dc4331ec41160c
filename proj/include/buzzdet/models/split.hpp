#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "buzzdet/error.hpp"
#include "buzzdet/record.hpp"

namespace buzzdet::models {

enum class SplitMode { Chrono602020, Chrono8020, LeaveOneWhaleOut };
enum class Part { Train, Val, Test };

inline std::string_view split_mode_name(SplitMode m) {
  switch (m) {
    case SplitMode::Chrono602020: return "chrono-60-20-20";
    case SplitMode::Chrono8020: return "chrono-80-20";
    case SplitMode::LeaveOneWhaleOut: return "leave-one-whale-out";
  }
  return "?";
}

inline SplitMode parse_split_mode(std::string_view s) {
  if (s == "chrono-60-20-20") return SplitMode::Chrono602020;
  if (s == "chrono-80-20") return SplitMode::Chrono8020;
  if (s == "leave-one-whale-out") return SplitMode::LeaveOneWhaleOut;
  throw ConfigError("unknown split mode '" + std::string(s) +
                    "' (expected chrono-60-20-20, chrono-80-20 or leave-one-whale-out)");
}

inline std::string_view part_name(Part p) {
  switch (p) {
    case Part::Train: return "train";
    case Part::Val: return "val";
    case Part::Test: return "test";
  }
  return "?";
}

/// Sample range [begin, end) of one whale assigned to one part.
struct Assignment {
  std::size_t whale = 0;
  Part part = Part::Train;
  std::size_t begin = 0, end = 0;
  std::size_t size() const { return end - begin; }
};

struct Fold {
  std::vector<Assignment> items;

  std::vector<Assignment> of(Part p) const {
    std::vector<Assignment> out;
    for (const auto& a : items)
      if (a.part == p) out.push_back(a);
    return out;
  }
  std::optional<Part> part_of(std::size_t whale, std::size_t begin, std::size_t end) const {
    for (const auto& a : items)
      if (a.whale == whale && begin >= a.begin && end <= a.end) return a.part;
    return std::nullopt;
  }
};

/// Partition of every whale's samples; chrono modes yield one fold,
/// leave-one-whale-out yields one fold per whale.
struct SplitPlan {
  SplitMode mode = SplitMode::Chrono602020;
  std::vector<std::string> whale_ids;
  std::vector<std::size_t> lengths;
  std::vector<Fold> folds;
};

struct RecordInfo {
  std::string whale_id;
  std::size_t length = 0;
};

inline SplitPlan split(const std::vector<RecordInfo>& records, SplitMode mode) {
  if (records.empty()) throw ConfigError("split: need at least one record");
  SplitPlan plan;
  plan.mode = mode;
  for (const auto& r : records) {
    plan.whale_ids.push_back(r.whale_id);
    plan.lengths.push_back(r.length);
  }
  if (mode == SplitMode::LeaveOneWhaleOut) {
    const std::size_t k = records.size();
    if (k < 3)
      throw ConfigError("split: leave-one-whale-out needs at least 3 whales, got " + std::to_string(k));
    for (std::size_t test = 0; test < k; ++test) {
      const std::size_t val = (test + 1) % k;
      Fold f;
      for (std::size_t w = 0; w < k; ++w) {
        const Part p = w == test ? Part::Test : w == val ? Part::Val : Part::Train;
        f.items.push_back({w, p, 0, records[w].length});
      }
      plan.folds.push_back(std::move(f));
    }
    return plan;
  }
  Fold f;
  for (std::size_t w = 0; w < records.size(); ++w) {
    const std::size_t n = records[w].length;
    if (mode == SplitMode::Chrono602020) {
      const std::size_t c1 = n * 6 / 10, c2 = n * 8 / 10;
      f.items.push_back({w, Part::Train, 0, c1});
      f.items.push_back({w, Part::Val, c1, c2});
      f.items.push_back({w, Part::Test, c2, n});
    } else {
      const std::size_t c = n * 8 / 10;
      f.items.push_back({w, Part::Train, 0, c});
      f.items.push_back({w, Part::Test, c, n});
    }
  }
  plan.folds.push_back(std::move(f));
  return plan;
}

inline SplitPlan split(const std::vector<WhaleRecord>& records, SplitMode mode) {
  std::vector<RecordInfo> info;
  for (const auto& r : records) info.push_back({r.whale_id, r.size()});
  return split(info, mode);
}

/// Part of each tile [k*stride, k*stride+size) of one whale; tiles straddling a cut map to nullopt.
inline std::vector<std::optional<Part>> assign_tiles(const Fold& fold, std::size_t whale, std::size_t n_samples,
                                                     std::size_t size, std::size_t stride) {
  std::vector<std::optional<Part>> out;
  if (size == 0 || stride == 0 || n_samples < size) return out;
  const std::size_t n_tiles = (n_samples - size) / stride + 1;
  out.reserve(n_tiles);
  for (std::size_t k = 0; k < n_tiles; ++k) out.push_back(fold.part_of(whale, k * stride, k * stride + size));
  return out;
}

}  // namespace buzzdet::models
