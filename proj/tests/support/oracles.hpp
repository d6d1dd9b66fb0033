#pragma once

// Reference implementations written directly from the definitions. They share
// no code with the library kernels they check.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "cenic/tensor.hpp"

namespace oracle {

template <typename T>
cenic::BasicTensor<T> random_tensor(cenic::Shape s, std::mt19937_64& rng, double lo = -1.0,
                                    double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  cenic::BasicTensor<T> t(s);
  for (auto& v : t.data()) v = static_cast<T>(d(rng));
  return t;
}

template <typename T>
cenic::BasicConvWeights<T> random_weights(int out, int in, int k, std::mt19937_64& rng) {
  return {random_tensor<T>({out, in, k, k}, rng), random_tensor<T>({out, 1, 1, 1}, rng)};
}

inline int pad_before(int big, int k, int s) {
  const int small = (big + s - 1) / s;
  int total = (small - 1) * s + k - big;
  if (total < 0) total = 0;
  return total / 2;
}

// Direct seven-loop "same" convolution. Accumulates in T starting from the
// bias, the naive order for the element type.
template <typename T>
cenic::BasicTensor<T> conv_loops(const cenic::BasicTensor<T>& x, const cenic::BasicConvWeights<T>& w,
                                 int s) {
  const int k = w.kernel.h();
  const int oh = (x.h() + s - 1) / s;
  const int ow = (x.w() + s - 1) / s;
  const int py = pad_before(x.h(), k, s);
  const int px = pad_before(x.w(), k, s);
  cenic::BasicTensor<T> out({x.n(), w.kernel.n(), oh, ow});
  for (int b = 0; b < x.n(); ++b)
    for (int o = 0; o < w.kernel.n(); ++o)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          T acc = w.bias[o];
          for (int i = 0; i < x.c(); ++i)
            for (int dy = 0; dy < k; ++dy)
              for (int dx = 0; dx < k; ++dx) {
                const int iy = y * s - py + dy;
                const int ix = xx * s - px + dx;
                if (iy < 0 || ix < 0 || iy >= x.h() || ix >= x.w()) continue;
                acc += w.kernel.at(o, i, dy, dx) * x.at(b, i, iy, ix);
              }
          out.at(b, o, y, xx) = acc;
        }
  return out;
}

// Transposed convolution gathered per output sample: each kernel tap that
// lands on (oy, ox) contributes the channel sum of its source sample.
template <typename T>
cenic::BasicTensor<T> deconv_loops(const cenic::BasicTensor<T>& x,
                                   const cenic::BasicConvWeights<T>& w, int s) {
  const int k = w.kernel.h();
  const int bh = x.h() * s;
  const int bw = x.w() * s;
  const int py = pad_before(bh, k, s);
  const int px = pad_before(bw, k, s);
  cenic::BasicTensor<T> out({x.n(), w.kernel.n(), bh, bw});
  for (int b = 0; b < x.n(); ++b)
    for (int o = 0; o < w.kernel.n(); ++o)
      for (int oy = 0; oy < bh; ++oy)
        for (int ox = 0; ox < bw; ++ox) {
          T acc = 0;
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) {
              const int ty = oy + py - dy;
              const int tx = ox + px - dx;
              if (ty < 0 || tx < 0 || ty % s != 0 || tx % s != 0) continue;
              const int y = ty / s;
              const int xx = tx / s;
              if (y >= x.h() || xx >= x.w()) continue;
              T part = 0;
              for (int i = 0; i < x.c(); ++i) part += w.kernel.at(o, i, dy, dx) * x.at(b, i, y, xx);
              acc += part;
            }
          out.at(b, o, oy, ox) = acc + w.bias[o];
        }
  return out;
}

// Same operator by scattering every input sample through the kernel, in
// long double. Used where an order-independent reference is wanted.
inline cenic::Tensor deconv_scatter(const cenic::Tensor& x, const cenic::ConvWeights& w, int s) {
  const int k = w.kernel.h();
  const int bh = x.h() * s;
  const int bw = x.w() * s;
  const int py = pad_before(bh, k, s);
  const int px = pad_before(bw, k, s);
  std::vector<long double> acc(static_cast<std::size_t>(x.n()) * w.kernel.n() * bh * bw, 0.0L);
  auto idx = [&](int b, int o, int y, int xx) {
    return ((static_cast<std::size_t>(b) * w.kernel.n() + o) * bh + y) * bw + xx;
  };
  for (int b = 0; b < x.n(); ++b)
    for (int o = 0; o < w.kernel.n(); ++o)
      for (int i = 0; i < x.c(); ++i)
        for (int y = 0; y < x.h(); ++y)
          for (int xx = 0; xx < x.w(); ++xx)
            for (int dy = 0; dy < k; ++dy)
              for (int dx = 0; dx < k; ++dx) {
                const int oy = y * s - py + dy;
                const int ox = xx * s - px + dx;
                if (oy < 0 || ox < 0 || oy >= bh || ox >= bw) continue;
                acc[idx(b, o, oy, ox)] +=
                    static_cast<long double>(w.kernel.at(o, i, dy, dx)) * x.at(b, i, y, xx);
              }
  cenic::Tensor out({x.n(), w.kernel.n(), bh, bw});
  for (int b = 0; b < x.n(); ++b)
    for (int o = 0; o < w.kernel.n(); ++o)
      for (int y = 0; y < bh; ++y)
        for (int xx = 0; xx < bw; ++xx)
          out.at(b, o, y, xx) = static_cast<double>(acc[idx(b, o, y, xx)] + w.bias[o]);
  return out;
}

// Central differences of a scalar function of one tensor, probing `probes`
// random coordinates. Returns the max over probes of
// |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline double fd_check(const std::function<double(const cenic::Tensor&)>& f, const cenic::Tensor& at,
                       const cenic::Tensor& analytic, int probes, std::mt19937_64& rng,
                       double h = 1e-5, double floor = 1e-6) {
  std::uniform_int_distribution<std::size_t> pick(0, at.size() - 1);
  double worst = 0;
  for (int p = 0; p < probes; ++p) {
    const std::size_t i = pick(rng);
    cenic::Tensor plus = at;
    cenic::Tensor minus = at;
    plus[i] += h;
    minus[i] -= h;
    const double num = (f(plus) - f(minus)) / (2 * h);
    const double ana = analytic[i];
    const double denom = std::max({std::abs(num), std::abs(ana), floor});
    worst = std::max(worst, std::abs(num - ana) / denom);
  }
  return worst;
}

// Standard normal CDF from the complementary error function.
inline double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// MS-SSIM straight from the definition: full 2-D Gaussian window, every
// statistic summed per output pixel, 2x2 block means between scales.
inline double ms_ssim_direct(const cenic::Tensor& a0, const cenic::Tensor& b0, int scales, double peak = 1.0) {
  const double weights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  double g[11], gs = 0;
  for (int i = 0; i < 11; ++i) {
    g[i] = std::exp(-(i - 5) * (i - 5) / (2 * 1.5 * 1.5));
    gs += g[i];
  }
  const double c1 = (0.01 * peak) * (0.01 * peak), c2 = (0.03 * peak) * (0.03 * peak);
  double wsum = 0;
  for (int s = 0; s < scales; ++s) wsum += weights[s];
  cenic::Tensor a = a0, b = b0;
  double result = 1;
  for (int s = 0; s < scales; ++s) {
    if (s > 0) {
      auto down = [](const cenic::Tensor& t) {
        cenic::Tensor o({t.n(), t.c(), t.h() / 2, t.w() / 2});
        for (int n = 0; n < o.n(); ++n)
          for (int c = 0; c < o.c(); ++c)
            for (int y = 0; y < o.h(); ++y)
              for (int x = 0; x < o.w(); ++x)
                o.at(n, c, y, x) = 0.25 * (t.at(n, c, 2 * y, 2 * x) + t.at(n, c, 2 * y, 2 * x + 1) +
                                           t.at(n, c, 2 * y + 1, 2 * x) + t.at(n, c, 2 * y + 1, 2 * x + 1));
        return o;
      };
      a = down(a);
      b = down(b);
    }
    double cs_sum = 0, ssim_sum = 0;
    long count = 0;
    for (int n = 0; n < a.n(); ++n)
      for (int c = 0; c < a.c(); ++c)
        for (int y = 0; y + 11 <= a.h(); ++y)
          for (int x = 0; x + 11 <= a.w(); ++x) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (int i = 0; i < 11; ++i)
              for (int j = 0; j < 11; ++j) {
                const double w = g[i] * g[j] / (gs * gs);
                const double va = a.at(n, c, y + i, x + j), vb = b.at(n, c, y + i, x + j);
                ma += w * va;
                mb += w * vb;
                saa += w * va * va;
                sbb += w * vb * vb;
                sab += w * va * vb;
              }
            const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
            const double cs = (2 * cov + c2) / (va + vb + c2);
            const double l = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
            cs_sum += cs;
            ssim_sum += l * cs;
            ++count;
          }
    const double term = (s + 1 < scales ? cs_sum : ssim_sum) / count;
    result *= std::pow(std::max(term, 0.0), weights[s] / wsum);
  }
  return result;
}

}  // namespace oracle
