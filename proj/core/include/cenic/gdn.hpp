#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cenic/autodiff.hpp"
#include "cenic/tensor.hpp"

namespace cenic {

// classic: alpha = 2, epsilon = 0.5.  simplified ("1DN"): alpha = epsilon = 1.
enum class GdnMode { classic, simplified };
// divide: GDN.  multiply: inverse GDN.
enum class GdnDirection { divide, multiply };

std::string_view to_string(GdnMode m);
std::string_view to_string(GdnDirection d);
GdnMode parse_gdn_mode(std::string_view s);

inline constexpr double kBetaFloor = 1e-6;

// beta is stored as (C, 1, 1, 1) and gamma as (C, C, 1, 1), so the channel
// mix is literally a 1x1 convolution with kernel gamma and bias beta.
template <typename T>
struct BasicGdnParams {
  BasicTensor<T> beta;
  BasicTensor<T> gamma;
  GdnMode mode = GdnMode::classic;
  GdnDirection direction = GdnDirection::divide;

  int channels() const { return beta.n(); }
  void validate() const;

  template <typename U>
  BasicGdnParams<U> cast() const {
    return {beta.template cast<U>(), gamma.template cast<U>(), mode, direction};
  }
};

using GdnParams = BasicGdnParams<double>;

// beta = 1, gamma = 0.1 * I.
GdnParams gdn_init(int channels, GdnMode mode, GdnDirection direction);

template <typename T>
BasicTensor<T> gdn_eval(const BasicTensor<T>& x, const BasicGdnParams<T>& p);

// Reference path through the exponent form
//   z_i = x_i / (beta_i + sum_j gamma_ij |x_j|^alpha)^epsilon
// (multiplied instead of divided for the inverse direction). p.mode is ignored.
Tensor gdn_eval_generic(const Tensor& x, const GdnParams& p, double alpha, double epsilon);

// beta >= kBetaFloor, gamma >= 0. Idempotent.
GdnParams gdn_project(const GdnParams& p);

namespace ad {
Var gdn(Var x, Var beta, Var gamma, GdnMode mode, GdnDirection direction);
}

struct GdnStageTiming {
  std::string variant;  // "classic" or "simplified"
  std::string stage;    // square_abs, channel_mix, bias_add, root, div_mul
  double median_ms = 0;
  double iqr_ms = 0;
};

struct GdnBenchConfig {
  int channels = 320;
  int height = 128;
  int width = 192;
  int reps = 30;
  int warmup = 3;
  std::uint64_t seed = 1;
  GdnDirection direction = GdnDirection::multiply;
  bool pin_thread = true;
};

struct GdnBenchReport {
  GdnBenchConfig config;
  double classic_median_ms = 0;
  double classic_iqr_ms = 0;
  double simplified_median_ms = 0;
  double simplified_iqr_ms = 0;
  std::vector<GdnStageTiming> stages;  // 2 variants x 5 stages
  bool pinned = false;
  std::string host;

  // 1 - simplified / classic, on medians.
  double speedup() const { return 1.0 - simplified_median_ms / classic_median_ms; }
  std::string to_csv() const;
};

// Staged f32 evaluation of both variants on identical inputs. reps >= 10.
GdnBenchReport gdn_microbench(const GdnBenchConfig& config);

}  // namespace cenic
