#pragma once

#include "cenic/tensor.hpp"

namespace cenic {

// "Same"-style geometry shared by conv2d and its adjoint. `big` is the
// resolution on the convolution's input side, `small` = ceil(big / stride).
// Total padding max((small - 1) * stride + K - big, 0) is split with the
// smaller half before.
struct AxisGeometry {
  int big = 0;
  int small = 0;
  int pad_before = 0;

  static AxisGeometry from_big(int big, int kernel, int stride);
};

struct ConvGeometry {
  AxisGeometry y;
  AxisGeometry x;
  int kernel = 1;
  int stride = 1;

  static ConvGeometry from_big(int h, int w, int kernel, int stride);
};

// Strided "same" convolution: (N, Cin, H, W) -> (N, Cout, ceil(H/S), ceil(W/S)).
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& input, const BasicConvWeights<T>& w, int stride);

// Transposed convolution, the linear adjoint of conv2d with the same padding
// rule: (N, Cin, H, W) -> (N, Cout, H*S, W*S). Weights are (Cout, Cin, K, K).
template <typename T>
BasicTensor<T> deconv2d(const BasicTensor<T>& input, const BasicConvWeights<T>& w, int stride);

template <typename T>
struct ConvGrads {
  BasicTensor<T> input;
  BasicTensor<T> kernel;
  BasicTensor<T> bias;
};

// Reverse-mode products for the two layer types. `need_input` skips the
// input cotangent when nothing upstream consumes it.
template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicConvWeights<T>& w, int stride,
                             const BasicTensor<T>& grad_out, bool need_input = true);

template <typename T>
ConvGrads<T> deconv2d_backward(const BasicTensor<T>& input, const BasicConvWeights<T>& w,
                               int stride, const BasicTensor<T>& grad_out,
                               bool need_input = true);

}  // namespace cenic
