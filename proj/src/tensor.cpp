#include "progmotion/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace progmotion {

std::string to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": shapes " + to_string(a) + " and " + to_string(b) + " differ");
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {
  if (shape_.empty() || shape_.size() > 4) throw ShapeError("tensor rank must be 1..4, got " + std::to_string(shape_.size()));
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_.empty() || shape_.size() > 4) throw ShapeError("tensor rank must be 1..4, got " + std::to_string(shape_.size()));
  if (element_count(shape_) != data_.size())
    throw ShapeError("shape " + to_string(shape_) + " does not match " + std::to_string(data_.size()) + " values");
}

template <typename T>
std::size_t Tensor<T>::extent(std::size_t axis) const {
  if (axis >= shape_.size()) throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape_));
  return shape_[axis];
}

template <typename T>
std::size_t Tensor<T>::offset(std::initializer_list<std::size_t> idx) const {
  if (idx.size() != shape_.size()) throw ShapeError("index rank does not match tensor rank");
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : idx) {
    if (i >= shape_[axis]) throw ShapeError("index out of range for shape " + to_string(shape_));
    flat = flat * shape_[axis] + i;
    ++axis;
  }
  return flat;
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
Tensor<T>& Tensor<T>::operator+=(const Tensor& other) {
  require_same_shape(shape_, other.shape_, "tensor add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

template <typename T>
Tensor<T>& Tensor<T>::operator-=(const Tensor& other) {
  require_same_shape(shape_, other.shape_, "tensor subtract");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

template <typename T>
Tensor<T>& Tensor<T>::operator*=(T factor) {
  for (auto& v : data_) v *= factor;
  return *this;
}

template <typename T>
Tensor<T> matmul_left(const Tensor<T>& a, const Tensor<T>& x) {
  if (a.rank() != 2 || a.extent(0) != a.extent(1))
    throw ShapeError("matmul_left: expected a square matrix, got " + to_string(a.shape()));
  if (x.rank() < 2 || x.extent(x.rank() - 2) != a.extent(0))
    throw ShapeError("matmul_left: matrix " + to_string(a.shape()) + " incompatible with " + to_string(x.shape()));
  const std::size_t n = a.extent(0);
  const std::size_t f = x.extent(x.rank() - 1);
  const std::size_t slices = n * f == 0 ? 0 : x.size() / (n * f);
  Tensor<T> out(x.shape());
  const T* ap = a.data();
  for (std::size_t s = 0; s < slices; ++s) {
    const T* xs = x.data() + s * n * f;
    T* os = out.data() + s * n * f;
    for (std::size_t i = 0; i < n; ++i) {
      T* orow = os + i * f;
      for (std::size_t k = 0; k < n; ++k) {
        const T aik = ap[i * n + k];
        const T* xrow = xs + k * f;
        for (std::size_t j = 0; j < f; ++j) orow[j] += aik * xrow[j];
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> matmul_right(const Tensor<T>& x, const Tensor<T>& w) {
  if (w.rank() != 2) throw ShapeError("matmul_right: expected a matrix, got " + to_string(w.shape()));
  if (w.extent(0) == 0 || w.extent(1) == 0) throw ShapeError("matmul_right: degenerate matrix " + to_string(w.shape()));
  if (x.extent(x.rank() - 1) != w.extent(0))
    throw ShapeError("matmul_right: " + to_string(x.shape()) + " incompatible with matrix " + to_string(w.shape()));
  const std::size_t fin = w.extent(0);
  const std::size_t fout = w.extent(1);
  const std::size_t rows = x.size() / fin;
  Shape shape = x.shape();
  shape.back() = fout;
  Tensor<T> out(shape);
  const T* wp = w.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* xr = x.data() + r * fin;
    T* orow = out.data() + r * fout;
    for (std::size_t k = 0; k < fin; ++k) {
      const T xv = xr[k];
      const T* wrow = wp + k * fout;
      for (std::size_t j = 0; j < fout; ++j) orow[j] += xv * wrow[j];
    }
  }
  return out;
}

template <typename T>
Tensor<T> transpose_frames_joints(const Tensor<T>& x) {
  if (x.rank() != 4) throw ShapeError("transpose_frames_joints: expected rank 4, got " + to_string(x.shape()));
  const std::size_t b = x.extent(0), l = x.extent(1), m = x.extent(2), f = x.extent(3);
  Tensor<T> out({b, m, l, f});
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t li = 0; li < l; ++li)
      for (std::size_t mi = 0; mi < m; ++mi) {
        const T* src = x.data() + ((bi * l + li) * m + mi) * f;
        T* dst = out.data() + ((bi * m + mi) * l + li) * f;
        std::copy(src, src + f, dst);
      }
  return out;
}

namespace {

// Splits a shape into (outer, extent at axis, inner) for contiguous band copies.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t extent = 0;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + to_string(shape));
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.extent = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

void require_match_except(const Shape& a, const Shape& b, std::size_t axis, const char* what) {
  bool ok = a.size() == b.size() && axis < a.size();
  for (std::size_t i = 0; ok && i < a.size(); ++i)
    if (i != axis && a[i] != b[i]) ok = false;
  if (!ok)
    throw ShapeError(std::string(what) + ": " + to_string(a) + " and " + to_string(b) + " disagree off axis " +
                     std::to_string(axis));
}

}  // namespace

template <typename T>
Tensor<T> concat_axis(const Tensor<T>& x, const Tensor<T>& y, std::size_t axis) {
  require_match_except(x.shape(), y.shape(), axis, "concat");
  Shape shape = x.shape();
  shape[axis] += y.extent(axis);
  Tensor<T> out(shape);
  assign_axis(out, x, axis, 0);
  assign_axis(out, y, axis, x.extent(axis));
  return out;
}

template <typename T>
Tensor<T> slice_axis(const Tensor<T>& x, std::size_t axis, std::size_t begin, std::size_t count) {
  const AxisSplit s = split_at(x.shape(), axis);
  if (begin + count > s.extent)
    throw ShapeError("slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) + ") out of range for " +
                     to_string(x.shape()));
  Shape shape = x.shape();
  shape[axis] = count;
  Tensor<T> out(shape);
  for (std::size_t o = 0; o < s.outer; ++o) {
    const T* src = x.data() + (o * s.extent + begin) * s.inner;
    std::copy(src, src + count * s.inner, out.data() + o * count * s.inner);
  }
  return out;
}

template <typename T>
void assign_axis(Tensor<T>& dst, const Tensor<T>& src, std::size_t axis, std::size_t begin) {
  require_match_except(dst.shape(), src.shape(), axis, "assign_axis");
  const AxisSplit d = split_at(dst.shape(), axis);
  const std::size_t count = src.extent(axis);
  if (begin + count > d.extent) throw ShapeError("assign_axis: band exceeds destination " + to_string(dst.shape()));
  for (std::size_t o = 0; o < d.outer; ++o) {
    const T* s = src.data() + o * count * d.inner;
    std::copy(s, s + count * d.inner, dst.data() + (o * d.extent + begin) * d.inner);
  }
}

template <typename T>
void accumulate_axis(Tensor<T>& dst, const Tensor<T>& src, std::size_t axis, std::size_t begin) {
  require_match_except(dst.shape(), src.shape(), axis, "accumulate_axis");
  const AxisSplit d = split_at(dst.shape(), axis);
  const std::size_t count = src.extent(axis);
  if (begin + count > d.extent) throw ShapeError("accumulate_axis: band exceeds destination " + to_string(dst.shape()));
  const std::size_t band = count * d.inner;
  for (std::size_t o = 0; o < d.outer; ++o) {
    const T* s = src.data() + o * band;
    T* t = dst.data() + (o * d.extent + begin) * d.inner;
    for (std::size_t i = 0; i < band; ++i) t[i] += s[i];
  }
}

template <typename T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a.shape(), b.shape(), "max_abs_diff");
  T worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, static_cast<T>(std::abs(a[i] - b[i])));
  return worst;
}

template <typename T>
bool all_finite(const Tensor<T>& x) {
  return std::all_of(x.values().begin(), x.values().end(), [](T v) { return std::isfinite(v); });
}

#define PROGMOTION_INSTANTIATE(T)                                                               \
  template class Tensor<T>;                                                                     \
  template Tensor<T> matmul_left(const Tensor<T>&, const Tensor<T>&);                           \
  template Tensor<T> matmul_right(const Tensor<T>&, const Tensor<T>&);                          \
  template Tensor<T> transpose_frames_joints(const Tensor<T>&);                                 \
  template Tensor<T> concat_axis(const Tensor<T>&, const Tensor<T>&, std::size_t);              \
  template Tensor<T> slice_axis(const Tensor<T>&, std::size_t, std::size_t, std::size_t);       \
  template void assign_axis(Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t);            \
  template void accumulate_axis(Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t);        \
  template T max_abs_diff(const Tensor<T>&, const Tensor<T>&);                                  \
  template bool all_finite(const Tensor<T>&);

PROGMOTION_INSTANTIATE(float)
PROGMOTION_INSTANTIATE(double)

#undef PROGMOTION_INSTANTIATE

}  // namespace progmotion
