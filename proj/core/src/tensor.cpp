#include "cenic/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace cenic {

std::string Shape::str() const {
  return std::to_string(n) + "x" + std::to_string(c) + "x" + std::to_string(h) + "x" +
         std::to_string(w);
}

std::string_view to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

namespace {
void check_shape(const Shape& s) {
  if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1)
    fail(ErrorKind::ShapeError, "tensor dimensions must be >= 1, got " + s.str());
}
}  // namespace

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill) : shape_(shape) {
  check_shape(shape);
  data_.assign(shape.size(), fill);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(shape), data_(std::move(data)) {
  check_shape(shape);
  if (data_.size() != shape.size())
    fail(ErrorKind::ShapeError, "data length " + std::to_string(data_.size()) +
                                    " does not match shape " + shape.str());
}

template <typename T>
T BasicTensor<T>::item() const {
  if (data_.size() != 1) fail(ErrorKind::ShapeError, "item() on non-scalar " + shape_.str());
  return data_[0];
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const {
  return BasicTensor(shape, data_);
}

template <typename T>
bool BasicTensor<T>::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
void BasicConvWeights<T>::validate() const {
  const Shape& k = kernel.shape();
  if (k.h != k.w) fail(ErrorKind::ShapeError, "kernel must be square, got " + k.str());
  if (k.h % 2 == 0) fail(ErrorKind::ShapeError, "kernel size must be odd, got " + k.str());
  if (bias.shape() != Shape{k.n, 1, 1, 1})
    fail(ErrorKind::ShapeError, "bias " + bias.shape().str() + " does not match kernel " + k.str());
}

template <typename T>
Padded<T> pad_to_multiple(const BasicTensor<T>& img, int multiple) {
  if (multiple < 1) fail(ErrorKind::DomainError, "pad multiple must be >= 1");
  const Shape& s = img.shape();
  const int ph = (s.h + multiple - 1) / multiple * multiple;
  const int pw = (s.w + multiple - 1) / multiple * multiple;
  BasicTensor<T> out(Shape{s.n, s.c, ph, pw});
  for (int b = 0; b < s.n; ++b)
    for (int ch = 0; ch < s.c; ++ch)
      for (int y = 0; y < ph; ++y) {
        const int sy = std::min(y, s.h - 1);
        for (int x = 0; x < pw; ++x) out.at(b, ch, y, x) = img.at(b, ch, sy, std::min(x, s.w - 1));
      }
  return {std::move(out), s.h, s.w};
}

template <typename T>
BasicTensor<T> crop(const BasicTensor<T>& img, int h, int w) {
  const Shape& s = img.shape();
  if (h > s.h || w > s.w || h < 1 || w < 1)
    fail(ErrorKind::ShapeError, "crop " + std::to_string(h) + "x" + std::to_string(w) +
                                    " outside " + s.str());
  BasicTensor<T> out(Shape{s.n, s.c, h, w});
  for (int b = 0; b < s.n; ++b)
    for (int ch = 0; ch < s.c; ++ch)
      for (int y = 0; y < h; ++y)
        std::copy_n(img.plane(b, ch) + static_cast<std::size_t>(y) * s.w, w,
                    out.plane(b, ch) + static_cast<std::size_t>(y) * w);
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) fail(ErrorKind::ShapeError, "max_abs_diff shape mismatch");
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.size() != b.size()) fail(ErrorKind::ShapeError, "dot size mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template struct BasicConvWeights<float>;
template struct BasicConvWeights<double>;
template Padded<float> pad_to_multiple(const BasicTensor<float>&, int);
template Padded<double> pad_to_multiple(const BasicTensor<double>&, int);
template BasicTensor<float> crop(const BasicTensor<float>&, int, int);
template BasicTensor<double> crop(const BasicTensor<double>&, int, int);

}  // namespace cenic
