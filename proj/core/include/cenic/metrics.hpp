#pragma once

#include <array>
#include <limits>
#include <string_view>

#include "cenic/autodiff.hpp"
#include "cenic/tensor.hpp"

namespace cenic {

// Returned as psnr_db for identical inputs.
inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

struct MsePsnr {
  double mse = 0;
  double psnr_db = 0;
};

// ShapeError unless shapes match.
MsePsnr mse_psnr(const Tensor& a, const Tensor& b, double peak);

inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

// Normalized 11-tap Gaussian, sigma 1.5.
std::array<double, kSsimWindow> ssim_window();

// Largest scale count (<= 5) whose coarsest level still fits the window.
int max_msssim_scales(int height, int width);

// Multi-scale SSIM with C1 = (0.01 peak)^2, C2 = (0.03 peak)^2, exponent
// weights renormalized over the first `scales` entries and 2x2 mean pooling
// between scales. Local statistics are pooled over the whole batch. Negative
// per-scale terms are clamped to zero. ScaleError if min(H, W) < 2^(scales-1) * 11.
double ms_ssim(const Tensor& a, const Tensor& b, int scales = 5, double peak = 1.0);

namespace ad {
Var ms_ssim(Var a, Var b, int scales = 5, double peak = 1.0);
}

enum class DbConvention { paper_literal, one_minus };

std::string_view to_string(DbConvention c);

// paper_literal: -10 log10(m), needs 0 < m <= 1.
// one_minus:     -10 log10(1 - m), needs 0 <= m < 1.
double db_msssim(double m, DbConvention convention);

struct QualityScore {
  double mse = 0;      // [0, 1] units, after 8-bit requantization
  double psnr_db = 0;  // peak 255 on the 8-bit values
  double ms_ssim = 0;
  double ms_ssim_db_paper = 0;
  double ms_ssim_db_conv = 0;
  int ms_ssim_scales = 0;
};

// Scores `reconstruction` against `original` (both in [0, 1]) after
// requantizing the reconstruction to 8 bits.
QualityScore score_quality(const Tensor& original, const Tensor& reconstruction);

}  // namespace cenic
