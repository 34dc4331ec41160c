#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "buzzdet/error.hpp"
#include "buzzdet/features.hpp"

namespace buzzdet::models {

/// Row-major design matrix with binary labels, the input of the tabular models.
struct Dataset {
  std::size_t rows = 0, cols = 0;
  std::vector<double> x;
  std::vector<std::uint8_t> y;

  std::span<const double> row(std::size_t i) const { return std::span<const double>(x).subspan(i * cols, cols); }

  void push_row(std::span<const double> values, std::uint8_t label) {
    if (rows == 0 && cols == 0) cols = values.size();
    if (values.size() != cols) throw ShapeError("Dataset: row width differs from column count");
    x.insert(x.end(), values.begin(), values.end());
    y.push_back(label);
    ++rows;
  }

  std::size_t positives() const {
    std::size_t s = 0;
    for (auto v : y) s += v;
    return s;
  }

  void require_both_classes(const char* who) const {
    const auto pos = positives();
    if (pos == 0 || pos == rows)
      throw ValidationError(std::string(who) + ": training data must contain both classes (found " +
                            std::to_string(pos) + " positive of " + std::to_string(rows) + " rows)");
  }

  void require_finite(const char* who) const {
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!std::isfinite(x[i]))
        throw ValidationError(std::string(who) + ": non-finite feature at row " + std::to_string(i / cols) +
                              ", column " + std::to_string(i % cols));
  }
};

/// Model-facing row of a feature table: 26 real features then the one-hot phase block.
inline std::vector<double> model_row(const FeatureRow& r) {
  std::vector<double> v(r.values.begin(), r.values.end());
  for (auto p : r.phase) v.push_back(static_cast<double>(p));
  return v;
}

inline void append_rows(Dataset& d, const FeatureTable& t) {
  if (d.rows == 0) d.cols = FeatureTable::width();
  for (const auto& r : t.rows) d.push_row(model_row(r), r.label);
}

inline Dataset to_dataset(const FeatureTable& t) {
  Dataset d;
  append_rows(d, t);
  return d;
}

}  // namespace buzzdet::models
