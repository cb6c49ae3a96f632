#pragma once

// Dense row-major tensors and the batched kernels the graph layers are built on.
//
// Axis order is fixed across the library: (batch, frames, joints, features).
// Kernels take exact shapes; there is no broadcasting.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace progmotion {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t element_count(const Shape& shape);

enum Axis : std::size_t { kBatch = 0, kFrames = 1, kJoints = 2, kFeatures = 3 };

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T{0});
  Tensor(Shape shape, std::vector<T> values);

  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape()); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  T& operator[](std::size_t flat) noexcept { return data_[flat]; }
  const T& operator[](std::size_t flat) const noexcept { return data_[flat]; }

  template <typename... I>
  T& at(I... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... I>
  const T& at(I... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  void fill(T value);
  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(T factor);

  bool operator==(const Tensor& other) const = default;

 private:
  std::size_t offset(std::initializer_list<std::size_t> idx) const;

  Shape shape_;
  std::vector<T> data_;
};

template <typename T>
Tensor<T> operator+(Tensor<T> a, const Tensor<T>& b) {
  a += b;
  return a;
}
template <typename T>
Tensor<T> operator-(Tensor<T> a, const Tensor<T>& b) {
  a -= b;
  return a;
}
template <typename T>
Tensor<T> operator*(Tensor<T> a, T factor) {
  a *= factor;
  return a;
}

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& x) {
  std::vector<To> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<To>(x[i]);
  return Tensor<To>(x.shape(), std::move(out));
}

/// Square matrix applied on the left of every trailing N×F slice.
template <typename T>
Tensor<T> matmul_left(const Tensor<T>& a, const Tensor<T>& x);

/// Every trailing N×F slice times an F×F' matrix.
template <typename T>
Tensor<T> matmul_right(const Tensor<T>& x, const Tensor<T>& w);

/// (B,L,M,F) -> (B,M,L,F).  An involution.
template <typename T>
Tensor<T> transpose_frames_joints(const Tensor<T>& x);

template <typename T>
Tensor<T> concat_axis(const Tensor<T>& x, const Tensor<T>& y, std::size_t axis);

template <typename T>
Tensor<T> concat_frames(const Tensor<T>& x, const Tensor<T>& y) {
  return concat_axis(x, y, kFrames);
}

/// Contiguous sub-range [begin, begin+count) of one axis.
template <typename T>
Tensor<T> slice_axis(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t count);

/// Writes `src` into `dst` at offset `begin` along `axis`; other extents must agree.
template <typename T>
void assign_axis(Tensor<T>& dst, const Tensor<T>& src, std::size_t axis, std::size_t begin);

/// Adds `src` into the [begin, begin+extent) band of `dst` along `axis`.
template <typename T>
void accumulate_axis(Tensor<T>& dst, const Tensor<T>& src, std::size_t axis, std::size_t begin);

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
bool all_finite(const Tensor<T>& x);

void require_same_shape(const Shape& a, const Shape& b, const char* what);

}  // namespace progmotion
