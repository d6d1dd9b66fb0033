#include "cenic/gdn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "cenic/conv.hpp"
#include "cenic/gemm.hpp"
#include "cenic/timing.hpp"

namespace cenic {

std::string_view to_string(GdnMode m) { return m == GdnMode::classic ? "classic" : "simplified"; }

std::string_view to_string(GdnDirection d) {
  return d == GdnDirection::divide ? "divide" : "multiply";
}

GdnMode parse_gdn_mode(std::string_view s) {
  if (s == "classic") return GdnMode::classic;
  if (s == "simplified" || s == "1dn") return GdnMode::simplified;
  fail(ErrorKind::InputError, "unknown GDN mode '" + std::string(s) + "'");
}

template <typename T>
void BasicGdnParams<T>::validate() const {
  const int c = beta.n();
  if (beta.shape() != Shape{c, 1, 1, 1} || gamma.shape() != Shape{c, c, 1, 1})
    fail(ErrorKind::ShapeError,
         "GDN beta " + beta.shape().str() + " / gamma " + gamma.shape().str() + " inconsistent");
}

GdnParams gdn_init(int channels, GdnMode mode, GdnDirection direction) {
  GdnParams p{Tensor({channels, 1, 1, 1}, 1.0), Tensor({channels, channels, 1, 1}), mode,
              direction};
  for (int i = 0; i < channels; ++i) p.gamma.at(i, i, 0, 0) = 0.1;
  return p;
}

namespace {

template <typename T>
void check_channels(const BasicTensor<T>& x, const BasicGdnParams<T>& p) {
  p.validate();
  if (x.c() != p.channels())
    fail(ErrorKind::ChannelMismatch, "GDN over " + std::to_string(p.channels()) +
                                         " channels applied to input with " +
                                         std::to_string(x.c()));
}

// The five stages, operating on one batch item's (C, HW) block.
template <typename T>
void stage_square_abs(const T* x, T* out, std::size_t n, GdnMode mode) {
  if (mode == GdnMode::classic)
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * x[i];
  else
    for (std::size_t i = 0; i < n; ++i) out[i] = std::abs(x[i]);
}

template <typename T>
void stage_mix(const BasicTensor<T>& gamma, const T* in, T* out, int c, std::size_t hw) {
  gemm<T>(c, static_cast<int>(hw), c, gamma.ptr(), c, in, static_cast<int>(hw), out,
          static_cast<int>(hw), false);
}

template <typename T>
void stage_bias(const BasicTensor<T>& beta, T* out, int c, std::size_t hw) {
  for (int ch = 0; ch < c; ++ch) {
    const T b = beta[ch];
    T* row = out + ch * hw;
    for (std::size_t i = 0; i < hw; ++i) row[i] += b;
  }
}

template <typename T>
void stage_root(T* out, std::size_t n, GdnMode mode) {
  if (mode != GdnMode::classic) return;
  for (std::size_t i = 0; i < n; ++i) out[i] = std::sqrt(out[i]);
}

template <typename T>
void stage_div_mul(const T* x, T* norm, std::size_t n, GdnDirection d) {
  if (d == GdnDirection::divide)
    for (std::size_t i = 0; i < n; ++i) norm[i] = x[i] / norm[i];
  else
    for (std::size_t i = 0; i < n; ++i) norm[i] = x[i] * norm[i];
}

}  // namespace

template <typename T>
BasicTensor<T> gdn_eval(const BasicTensor<T>& x, const BasicGdnParams<T>& p) {
  check_channels(x, p);
  const int c = x.c();
  const std::size_t hw = x.shape().plane();
  const std::size_t block = c * hw;
  BasicTensor<T> out(x.shape());
  std::vector<T> tmp(block);
  for (int b = 0; b < x.n(); ++b) {
    const T* xb = x.plane(b, 0);
    T* ob = out.plane(b, 0);
    stage_square_abs(xb, tmp.data(), block, p.mode);
    stage_mix(p.gamma, tmp.data(), ob, c, hw);
    stage_bias(p.beta, ob, c, hw);
    stage_root(ob, block, p.mode);
    stage_div_mul(xb, ob, block, p.direction);
  }
  return out;
}

Tensor gdn_eval_generic(const Tensor& x, const GdnParams& p, double alpha, double epsilon) {
  check_channels(x, p);
  Tensor out(x.shape());
  for (int b = 0; b < x.n(); ++b)
    for (int y = 0; y < x.h(); ++y)
      for (int xx = 0; xx < x.w(); ++xx)
        for (int i = 0; i < x.c(); ++i) {
          double s = p.beta[i];
          for (int j = 0; j < x.c(); ++j)
            s += p.gamma.at(i, j, 0, 0) * std::pow(std::abs(x.at(b, j, y, xx)), alpha);
          const double norm = std::pow(s, epsilon);
          out.at(b, i, y, xx) = p.direction == GdnDirection::divide ? x.at(b, i, y, xx) / norm
                                                                     : x.at(b, i, y, xx) * norm;
        }
  return out;
}

GdnParams gdn_project(const GdnParams& p) {
  GdnParams q = p;
  for (double& v : q.beta.data()) v = std::max(v, kBetaFloor);
  for (double& v : q.gamma.data()) v = std::max(v, 0.0);
  return q;
}

namespace ad {

Var gdn(Var x, Var beta, Var gamma, GdnMode mode, GdnDirection direction) {
  const int c = x.shape().c;
  if (beta.shape() != Shape{c, 1, 1, 1} || gamma.shape() != Shape{c, c, 1, 1})
    fail(ErrorKind::ChannelMismatch, "GDN parameters do not match input channels");
  Var pre = mode == GdnMode::classic ? square(x) : abs(x);
  Var norm = conv2d(pre, gamma, beta, 1);
  if (mode == GdnMode::classic) norm = pow(norm, 0.5);
  return direction == GdnDirection::divide ? div(x, norm) : mul(x, norm);
}

}  // namespace ad

std::string GdnBenchReport::to_csv() const {
  std::ostringstream os;
  os << "variant,stage,median_ms,iqr_ms\n";
  os.precision(6);
  os << std::fixed;
  for (const auto& s : stages)
    os << s.variant << ',' << s.stage << ',' << s.median_ms << ',' << s.iqr_ms << '\n';
  os << "classic,total," << classic_median_ms << ',' << classic_iqr_ms << '\n';
  os << "simplified,total," << simplified_median_ms << ',' << simplified_iqr_ms << '\n';
  return os.str();
}

GdnBenchReport gdn_microbench(const GdnBenchConfig& cfg) {
  if (cfg.reps < 10) fail(ErrorKind::DomainError, "gdn microbench needs reps >= 10");
  GdnBenchReport rep;
  rep.config = cfg;
  rep.host = host_descriptor();
  rep.pinned = cfg.pin_thread && pin_to_single_cpu();

  const int c = cfg.channels;
  const std::size_t hw = static_cast<std::size_t>(cfg.height) * cfg.width;
  const std::size_t n = c * hw;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<float> nd(0.0f, 1.0f);
  std::uniform_real_distribution<float> ud(0.0f, 0.01f);
  TensorF x(Shape{1, c, cfg.height, cfg.width});
  for (float& v : x.data()) v = nd(rng);
  BasicGdnParams<float> params{TensorF({c, 1, 1, 1}, 1.0f), TensorF({c, c, 1, 1}),
                               GdnMode::classic, cfg.direction};
  for (float& v : params.gamma.data()) v = ud(rng);
  for (int i = 0; i < c; ++i) params.gamma.at(i, i, 0, 0) = 0.1f;

  std::vector<float> tmp(n);
  std::vector<float> out(n);
  const char* stage_names[5] = {"square_abs", "channel_mix", "bias_add", "root", "div_mul"};
  const GdnMode modes[2] = {GdnMode::classic, GdnMode::simplified};
  std::vector<double> samples[2][6];

  auto run_once = [&](GdnMode mode, double* t) {
    Stopwatch sw;
    stage_square_abs(x.ptr(), tmp.data(), n, mode);
    t[0] = sw.elapsed_ms();
    sw.reset();
    stage_mix(params.gamma, tmp.data(), out.data(), c, hw);
    t[1] = sw.elapsed_ms();
    sw.reset();
    stage_bias(params.beta, out.data(), c, hw);
    t[2] = sw.elapsed_ms();
    sw.reset();
    stage_root(out.data(), n, mode);
    t[3] = sw.elapsed_ms();
    sw.reset();
    stage_div_mul(x.ptr(), out.data(), n, cfg.direction);
    t[4] = sw.elapsed_ms();
  };

  double t[5];
  for (int w = 0; w < cfg.warmup; ++w)
    for (GdnMode m : modes) run_once(m, t);
  // Interleave the variants so slow drift of the host affects both equally.
  for (int r = 0; r < cfg.reps; ++r)
    for (int v = 0; v < 2; ++v) {
      run_once(modes[v], t);
      double total = 0;
      for (int s = 0; s < 5; ++s) {
        samples[v][s].push_back(t[s]);
        total += t[s];
      }
      samples[v][5].push_back(total);
    }

  for (int v = 0; v < 2; ++v) {
    for (int s = 0; s < 5; ++s) {
      const Stats st = summarize(samples[v][s]);
      rep.stages.push_back({std::string(to_string(modes[v])), stage_names[s], st.median, st.iqr()});
    }
  }
  const Stats cs = summarize(samples[0][5]);
  const Stats ss = summarize(samples[1][5]);
  rep.classic_median_ms = cs.median;
  rep.classic_iqr_ms = cs.iqr();
  rep.simplified_median_ms = ss.median;
  rep.simplified_iqr_ms = ss.iqr();
  return rep;
}

template struct BasicGdnParams<float>;
template struct BasicGdnParams<double>;
template TensorF gdn_eval(const TensorF&, const BasicGdnParams<float>&);
template Tensor gdn_eval(const Tensor&, const BasicGdnParams<double>&);

}  // namespace cenic
