#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "buzzdet/error.hpp"

namespace buzzdet::nn {

/// Dense (batch, channels, length) tensor, row-major with length fastest.
template <class Real>
class BasicTensor3 {
public:
  using value_type = Real;

  BasicTensor3() = default;
  BasicTensor3(std::size_t batch, std::size_t channels, std::size_t length, Real fill = Real(0))
      : batch_(batch), channels_(channels), length_(length), data_(batch * channels * length, fill) {}

  std::size_t batch() const { return batch_; }
  std::size_t channels() const { return channels_; }
  std::size_t length() const { return length_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real& operator()(std::size_t b, std::size_t c, std::size_t t) { return data_[(b * channels_ + c) * length_ + t]; }
  const Real& operator()(std::size_t b, std::size_t c, std::size_t t) const {
    return data_[(b * channels_ + c) * length_ + t];
  }

  std::span<Real> row(std::size_t b, std::size_t c) {
    return std::span<Real>(data_).subspan((b * channels_ + c) * length_, length_);
  }
  std::span<const Real> row(std::size_t b, std::size_t c) const {
    return std::span<const Real>(data_).subspan((b * channels_ + c) * length_, length_);
  }

  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  std::vector<Real>& storage() { return data_; }
  const std::vector<Real>& storage() const { return data_; }

  bool same_shape(const BasicTensor3& o) const {
    return batch_ == o.batch_ && channels_ == o.channels_ && length_ == o.length_;
  }
  std::string shape_str() const {
    return "(" + std::to_string(batch_) + "," + std::to_string(channels_) + "," + std::to_string(length_) + ")";
  }

  friend bool operator==(const BasicTensor3&, const BasicTensor3&) = default;

private:
  std::size_t batch_ = 0, channels_ = 0, length_ = 0;
  std::vector<Real> data_;
};

using Tensor3 = BasicTensor3<double>;

/// Raises NumericError naming `op` if any value is NaN or Inf.
template <class Real>
void check_finite(std::span<const Real> v, const char* op) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i])) throw NumericError(std::string("non-finite value produced by ") + op + " at element " +
                                                 std::to_string(i));
}

template <class Real>
void check_finite(const BasicTensor3<Real>& t, const char* op) {
  check_finite(t.data(), op);
}

}  // namespace buzzdet::nn
