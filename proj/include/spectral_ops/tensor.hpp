#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spectral_ops/errors.hpp"

namespace spectral_ops {

using Shape = std::vector<std::size_t>;

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

std::string to_string(const Shape& shape);

/// Number of elements described by `shape`. Throws ShapeError when the shape
/// has rank 0 or any zero extent.
std::size_t checked_numel(const Shape& shape);

/// Dense row-major n-dimensional array with an explicit shape.
///
/// `T` is `float`, `double`, or `std::complex` of either. Operations in this
/// library never mutate their operands; the mutable accessors exist so that
/// results can be filled in place before they are handed out.
template <class T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(checked_numel(shape_)) {}

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != checked_numel(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + to_string(shape_));
    }
  }

  static Tensor filled(Shape shape, T value) {
    Tensor t(std::move(shape));
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  /// Extent along `axis`; negative values count from the end.
  std::size_t extent(int axis) const { return shape_.at(resolve_axis(axis)); }

  std::size_t resolve_axis(int axis) const {
    const int r = static_cast<int>(shape_.size());
    const int a = axis < 0 ? axis + r : axis;
    if (a < 0 || a >= r) {
      throw ShapeError("axis " + std::to_string(axis) + " out of range for rank " +
                       std::to_string(r));
    }
    return static_cast<std::size_t>(a);
  }

  std::span<const T> data() const noexcept { return data_; }
  std::span<T> data() noexcept { return data_; }
  const std::vector<T>& vec() const noexcept { return data_; }

  const T& operator[](std::size_t i) const { return data_[i]; }
  T& operator[](std::size_t i) { return data_[i]; }

  const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_.back() + j]; }
  T& at(std::size_t i, std::size_t j) { return data_[i * shape_.back() + j]; }

  const T& at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  T& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  /// Same buffer under a new shape with the same element count.
  Tensor reshaped(Shape shape) const& { return Tensor(std::move(shape), data_); }
  Tensor reshaped(Shape shape) && { return Tensor(std::move(shape), std::move(data_)); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<T> data_;
};

template <class T>
using ComplexTensor = Tensor<std::complex<T>>;

template <class T>
ComplexTensor<T> to_complex(const Tensor<T>& x) {
  ComplexTensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i];
  return out;
}

template <class T>
Tensor<T> real_part(const ComplexTensor<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i].real();
  return out;
}

template <class To, class From>
Tensor<To> cast(const Tensor<From>& x) {
  Tensor<To> out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<To>(x[i]);
  return out;
}

/// Largest absolute element-wise difference. Throws ShapeError on mismatch.
template <class T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, static_cast<double>(std::abs(a[i] - b[i])));
  }
  return m;
}

}  // namespace spectral_ops
