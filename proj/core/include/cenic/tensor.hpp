#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cenic/error.hpp"

namespace cenic {

// (batch, channels, height, width); every dimension is at least 1.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

enum class Precision { f32, f64 };

std::string_view to_string(Precision p);

template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape, T fill = T(0));
  BasicTensor(Shape shape, std::vector<T> data);

  static BasicTensor zeros(Shape shape) { return BasicTensor(shape); }
  static BasicTensor scalar(T v) { return BasicTensor(Shape{1, 1, 1, 1}, v); }

  const Shape& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* ptr() { return data_.data(); }
  const T* ptr() const { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::size_t index(int b, int ch, int y, int x) const {
    return ((static_cast<std::size_t>(b) * shape_.c + ch) * shape_.h + y) * shape_.w + x;
  }
  T& at(int b, int ch, int y, int x) { return data_[index(b, ch, y, x)]; }
  const T& at(int b, int ch, int y, int x) const { return data_[index(b, ch, y, x)]; }

  // Pointer to the (b, ch) spatial plane.
  T* plane(int b, int ch) { return data_.data() + index(b, ch, 0, 0); }
  const T* plane(int b, int ch) const { return data_.data() + index(b, ch, 0, 0); }

  T item() const;

  template <typename U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.size());
    for (std::size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return BasicTensor<U>(shape_, std::move(out));
  }

  BasicTensor reshaped(Shape shape) const;

  bool all_finite() const;

  bool operator==(const BasicTensor& o) const {
    return shape_ == o.shape_ && data_ == o.data_;
  }

 private:
  Shape shape_{};
  std::vector<T> data_;
};

using Tensor = BasicTensor<double>;
using TensorF = BasicTensor<float>;

// Kernel plus bias of a convolution or transposed convolution. The kernel is
// always laid out (out_channels, in_channels, K, K).
template <typename T>
struct BasicConvWeights {
  BasicTensor<T> kernel;
  BasicTensor<T> bias;  // (out_channels, 1, 1, 1)

  int out_channels() const { return kernel.n(); }
  int in_channels() const { return kernel.c(); }
  int kernel_size() const { return kernel.h(); }

  void validate() const;

  template <typename U>
  BasicConvWeights<U> cast() const {
    return {kernel.template cast<U>(), bias.template cast<U>()};
  }
};

using ConvWeights = BasicConvWeights<double>;

// Replicate-pads the spatial dims up to the next multiple of `multiple`.
template <typename T>
struct Padded {
  BasicTensor<T> tensor;
  int original_h = 0;
  int original_w = 0;
};

template <typename T>
Padded<T> pad_to_multiple(const BasicTensor<T>& img, int multiple);

template <typename T>
BasicTensor<T> crop(const BasicTensor<T>& img, int h, int w);

double max_abs_diff(const Tensor& a, const Tensor& b);
double dot(const Tensor& a, const Tensor& b);

}  // namespace cenic
