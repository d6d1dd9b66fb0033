#include "cenic/conv.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "cenic/gemm.hpp"

namespace cenic {

AxisGeometry AxisGeometry::from_big(int big, int kernel, int stride) {
  AxisGeometry g;
  g.big = big;
  g.small = (big + stride - 1) / stride;
  const int total = std::max((g.small - 1) * stride + kernel - big, 0);
  g.pad_before = total / 2;
  return g;
}

ConvGeometry ConvGeometry::from_big(int h, int w, int kernel, int stride) {
  return {AxisGeometry::from_big(h, kernel, stride), AxisGeometry::from_big(w, kernel, stride),
          kernel, stride};
}

namespace {

template <typename T>
void check_args(const BasicTensor<T>& input, const BasicConvWeights<T>& w, int stride) {
  if (stride < 1) fail(ErrorKind::InvalidStride, "stride must be >= 1, got " + std::to_string(stride));
  w.validate();
  if (input.c() != w.in_channels())
    fail(ErrorKind::ChannelMismatch, "input has " + std::to_string(input.c()) +
                                         " channels, weights expect " +
                                         std::to_string(w.in_channels()));
}

bool is_pointwise(const ConvGeometry& g) { return g.kernel == 1 && g.stride == 1; }

// col[(c, dy, dx), (oy, ox)] = big[c, oy*S - pad + dy, ox*S - pad + dx], zero outside.
template <typename T>
void im2col(const T* big, int channels, const ConvGeometry& g, T* col) {
  const int k = g.kernel;
  const int s = g.stride;
  const int oh = g.y.small;
  const int ow = g.x.small;
  const int bh = g.y.big;
  const int bw = g.x.big;
  T* dst = col;
  for (int c = 0; c < channels; ++c) {
    const T* src = big + static_cast<std::size_t>(c) * bh * bw;
    for (int dy = 0; dy < k; ++dy)
      for (int dx = 0; dx < k; ++dx) {
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s - g.y.pad_before + dy;
          if (iy < 0 || iy >= bh) {
            std::fill_n(dst, ow, T(0));
            dst += ow;
            continue;
          }
          const T* row = src + static_cast<std::size_t>(iy) * bw;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s - g.x.pad_before + dx;
            *dst++ = (ix >= 0 && ix < bw) ? row[ix] : T(0);
          }
        }
      }
  }
}

// Adjoint of im2col: scatter-add columns back onto the big grid, rows in
// ascending (c, dy, dx) order.
template <typename T>
void col2im(const T* col, int channels, const ConvGeometry& g, T* big) {
  const int k = g.kernel;
  const int s = g.stride;
  const int oh = g.y.small;
  const int ow = g.x.small;
  const int bh = g.y.big;
  const int bw = g.x.big;
  const T* src = col;
  for (int c = 0; c < channels; ++c) {
    T* dst = big + static_cast<std::size_t>(c) * bh * bw;
    for (int dy = 0; dy < k; ++dy)
      for (int dx = 0; dx < k; ++dx) {
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s - g.y.pad_before + dy;
          if (iy < 0 || iy >= bh) {
            src += ow;
            continue;
          }
          T* row = dst + static_cast<std::size_t>(iy) * bw;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s - g.x.pad_before + dx;
            if (ix >= 0 && ix < bw) row[ix] += src[ox];
          }
          src += ow;
        }
      }
  }
}

// A2[(f, dy, dx), c] = kernel[f, c, dy, dx]
template <typename T>
std::vector<T> deconv_matrix(const BasicTensor<T>& kernel) {
  const int f = kernel.n();
  const int cin = kernel.c();
  const int kk = kernel.h() * kernel.w();
  std::vector<T> m(static_cast<std::size_t>(f) * kk * cin);
  for (int o = 0; o < f; ++o)
    for (int c = 0; c < cin; ++c)
      for (int t = 0; t < kk; ++t)
        m[(static_cast<std::size_t>(o) * kk + t) * cin + c] =
            kernel[(static_cast<std::size_t>(o) * cin + c) * kk + t];
  return m;
}

template <typename T>
void fill_bias_rows(T* out, const BasicTensor<T>& bias, std::size_t plane) {
  for (int o = 0; o < bias.n(); ++o) std::fill_n(out + o * plane, plane, bias[o]);
}

template <typename T>
void add_bias_rows(T* out, const BasicTensor<T>& bias, std::size_t plane) {
  for (int o = 0; o < bias.n(); ++o) {
    const T b = bias[o];
    T* row = out + o * plane;
    for (std::size_t i = 0; i < plane; ++i) row[i] += b;
  }
}

template <typename T>
void accumulate_bias_grad(const T* grad, int channels, std::size_t plane, BasicTensor<T>& db) {
  for (int o = 0; o < channels; ++o) {
    T s = 0;
    const T* row = grad + o * plane;
    for (std::size_t i = 0; i < plane; ++i) s += row[i];
    db[o] += s;
  }
}

}  // namespace

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicConvWeights<T>& w, int stride) {
  check_args(input, w, stride);
  const ConvGeometry g = ConvGeometry::from_big(input.h(), input.w(), w.kernel_size(), stride);
  const int cin = input.c();
  const int cout = w.out_channels();
  const int rows = cin * g.kernel * g.kernel;
  const std::size_t p = static_cast<std::size_t>(g.y.small) * g.x.small;
  BasicTensor<T> out(Shape{input.n(), cout, g.y.small, g.x.small});
  std::vector<T> col(is_pointwise(g) ? 0 : rows * p);
  for (int b = 0; b < input.n(); ++b) {
    const T* bmat = input.plane(b, 0);
    if (!is_pointwise(g)) {
      im2col(input.plane(b, 0), cin, g, col.data());
      bmat = col.data();
    }
    T* dst = out.plane(b, 0);
    fill_bias_rows(dst, w.bias, p);
    gemm<T>(cout, static_cast<int>(p), rows, w.kernel.ptr(), rows, bmat, static_cast<int>(p), dst,
            static_cast<int>(p), true);
  }
  return out;
}

template <typename T>
BasicTensor<T> deconv2d(const BasicTensor<T>& input, const BasicConvWeights<T>& w, int stride) {
  check_args(input, w, stride);
  const int k = w.kernel_size();
  const ConvGeometry g = ConvGeometry::from_big(input.h() * stride, input.w() * stride, k, stride);
  const int cin = input.c();
  const int cout = w.out_channels();
  const int rows = cout * k * k;
  const std::size_t q = static_cast<std::size_t>(input.h()) * input.w();
  const std::size_t big = static_cast<std::size_t>(g.y.big) * g.x.big;
  BasicTensor<T> out(Shape{input.n(), cout, g.y.big, g.x.big});
  if (is_pointwise(g)) {
    for (int b = 0; b < input.n(); ++b) {
      T* dst = out.plane(b, 0);
      gemm<T>(cout, static_cast<int>(q), cin, w.kernel.ptr(), cin, input.plane(b, 0),
              static_cast<int>(q), dst, static_cast<int>(q), false);
      add_bias_rows(dst, w.bias, big);
    }
    return out;
  }
  const std::vector<T> a2 = deconv_matrix(w.kernel);
  std::vector<T> col(rows * q);
  for (int b = 0; b < input.n(); ++b) {
    gemm<T>(rows, static_cast<int>(q), cin, a2.data(), cin, input.plane(b, 0), static_cast<int>(q),
            col.data(), static_cast<int>(q), false);
    T* dst = out.plane(b, 0);
    col2im(col.data(), cout, g, dst);
    add_bias_rows(dst, w.bias, big);
  }
  return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicConvWeights<T>& w, int stride,
                             const BasicTensor<T>& grad_out, bool need_input) {
  check_args(input, w, stride);
  const ConvGeometry g = ConvGeometry::from_big(input.h(), input.w(), w.kernel_size(), stride);
  const int cin = input.c();
  const int cout = w.out_channels();
  const int rows = cin * g.kernel * g.kernel;
  const int p = g.y.small * g.x.small;
  if (grad_out.shape() != Shape{input.n(), cout, g.y.small, g.x.small})
    fail(ErrorKind::ShapeError, "conv2d_backward: grad_out " + grad_out.shape().str());

  ConvGrads<T> grads{need_input ? BasicTensor<T>(input.shape()) : BasicTensor<T>(),
                     BasicTensor<T>(w.kernel.shape()), BasicTensor<T>(w.bias.shape())};
  std::vector<T> kernel_t(static_cast<std::size_t>(rows) * cout);
  transpose(cout, rows, w.kernel.ptr(), kernel_t.data());
  std::vector<T> col(static_cast<std::size_t>(rows) * p);
  std::vector<T> col_t(col.size());
  for (int b = 0; b < input.n(); ++b) {
    const T* dout = grad_out.plane(b, 0);
    accumulate_bias_grad(dout, cout, p, grads.bias);
    const T* cmat = input.plane(b, 0);
    if (!is_pointwise(g)) {
      im2col(input.plane(b, 0), cin, g, col.data());
      cmat = col.data();
    }
    transpose(rows, p, cmat, col_t.data());
    gemm<T>(cout, rows, p, dout, p, col_t.data(), rows, grads.kernel.ptr(), rows, true);
    if (!need_input) continue;
    if (is_pointwise(g)) {
      gemm<T>(rows, p, cout, kernel_t.data(), cout, dout, p, grads.input.plane(b, 0), p, false);
    } else {
      gemm<T>(rows, p, cout, kernel_t.data(), cout, dout, p, col.data(), p, false);
      col2im(col.data(), cin, g, grads.input.plane(b, 0));
    }
  }
  return grads;
}

template <typename T>
ConvGrads<T> deconv2d_backward(const BasicTensor<T>& input, const BasicConvWeights<T>& w,
                               int stride, const BasicTensor<T>& grad_out, bool need_input) {
  check_args(input, w, stride);
  const int k = w.kernel_size();
  const ConvGeometry g = ConvGeometry::from_big(input.h() * stride, input.w() * stride, k, stride);
  const int cin = input.c();
  const int cout = w.out_channels();
  const int rows = cout * k * k;
  const int q = input.h() * input.w();
  const int big = g.y.big * g.x.big;
  if (grad_out.shape() != Shape{input.n(), cout, g.y.big, g.x.big})
    fail(ErrorKind::ShapeError, "deconv2d_backward: grad_out " + grad_out.shape().str());

  ConvGrads<T> grads{need_input ? BasicTensor<T>(input.shape()) : BasicTensor<T>(),
                     BasicTensor<T>(w.kernel.shape()), BasicTensor<T>(w.bias.shape())};
  const std::vector<T> a2 = deconv_matrix(w.kernel);
  std::vector<T> a2_t(a2.size());
  transpose(rows, cin, a2.data(), a2_t.data());
  std::vector<T> d_a2(a2.size(), T(0));
  std::vector<T> col(is_pointwise(g) ? 0 : static_cast<std::size_t>(rows) * q);
  std::vector<T> in_t(static_cast<std::size_t>(q) * cin);
  for (int b = 0; b < input.n(); ++b) {
    const T* dout = grad_out.plane(b, 0);
    accumulate_bias_grad(dout, cout, big, grads.bias);
    const T* cmat = dout;
    if (!is_pointwise(g)) {
      im2col(dout, cout, g, col.data());
      cmat = col.data();
    }
    transpose(cin, q, input.plane(b, 0), in_t.data());
    gemm<T>(rows, cin, q, cmat, q, in_t.data(), cin, d_a2.data(), cin, true);
    if (need_input)
      gemm<T>(cin, q, rows, a2_t.data(), rows, cmat, q, grads.input.plane(b, 0), q, false);
  }
  const int kk = k * k;
  for (int o = 0; o < cout; ++o)
    for (int c = 0; c < cin; ++c)
      for (int t = 0; t < kk; ++t)
        grads.kernel[(static_cast<std::size_t>(o) * cin + c) * kk + t] =
            d_a2[(static_cast<std::size_t>(o) * kk + t) * cin + c];
  return grads;
}

template BasicTensor<float> conv2d(const BasicTensor<float>&, const BasicConvWeights<float>&, int);
template BasicTensor<double> conv2d(const BasicTensor<double>&, const BasicConvWeights<double>&,
                                    int);
template BasicTensor<float> deconv2d(const BasicTensor<float>&, const BasicConvWeights<float>&,
                                     int);
template BasicTensor<double> deconv2d(const BasicTensor<double>&, const BasicConvWeights<double>&,
                                      int);
template ConvGrads<float> conv2d_backward(const BasicTensor<float>&,
                                          const BasicConvWeights<float>&, int,
                                          const BasicTensor<float>&, bool);
template ConvGrads<double> conv2d_backward(const BasicTensor<double>&,
                                           const BasicConvWeights<double>&, int,
                                           const BasicTensor<double>&, bool);
template ConvGrads<float> deconv2d_backward(const BasicTensor<float>&,
                                            const BasicConvWeights<float>&, int,
                                            const BasicTensor<float>&, bool);
template ConvGrads<double> deconv2d_backward(const BasicTensor<double>&,
                                             const BasicConvWeights<double>&, int,
                                             const BasicTensor<double>&, bool);

}  // namespace cenic
