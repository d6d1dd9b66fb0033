#include "cenic/metrics.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "cenic/image.hpp"

namespace cenic {

MsePsnr mse_psnr(const Tensor& a, const Tensor& b, double peak) {
  if (a.shape() != b.shape()) fail(ErrorKind::ShapeError, "mse_psnr: " + a.shape().str() + " vs " + b.shape().str());
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  MsePsnr r;
  r.mse = acc / static_cast<double>(a.size());
  r.psnr_db = r.mse == 0 ? kPsnrInfinity : 10.0 * std::log10(peak * peak / r.mse);
  return r;
}

std::array<double, kSsimWindow> ssim_window() {
  std::array<double, kSsimWindow> w{};
  double sum = 0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    w[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

int max_msssim_scales(int height, int width) {
  int s = 0;
  while (s < 5 && std::min(height, width) >= (1 << s) * kSsimWindow) ++s;
  return s;
}

namespace {

void check_scales(const Shape& s, int scales) {
  if (scales < 1 || scales > 5) fail(ErrorKind::ScaleError, "ms_ssim supports 1 to 5 scales");
  const int need = (1 << (scales - 1)) * kSsimWindow;
  if (std::min(s.h, s.w) < need)
    fail(ErrorKind::ScaleError, "ms_ssim with " + std::to_string(scales) + " scales needs at least " +
                                    std::to_string(need) + " pixels per side, got " + s.str());
}

// prod_j max(v_j, 0)^w_j over scalar inputs.
Var weighted_product(const std::vector<Var>& terms, const std::vector<double>& weights) {
  std::vector<double> v(terms.size());
  double prod = 1;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    v[j] = std::max(terms[j].value()[0], 0.0);
    prod *= std::pow(v[j], weights[j]);
  }
  return terms[0].tape()->record(
      "msssim_product", Tensor::scalar(prod), terms, [terms, weights, v](Tape& tp, const Tensor& g) {
        for (std::size_t j = 0; j < terms.size(); ++j) {
          if (v[j] <= 0) continue;
          double others = 1;
          for (std::size_t k = 0; k < terms.size(); ++k)
            if (k != j) others *= std::pow(v[k], weights[k]);
          tp.accumulate(terms[j], Tensor::scalar(g[0] * others * weights[j] * std::pow(v[j], weights[j] - 1)));
        }
      });
}

}  // namespace

namespace ad {

Var ms_ssim(Var a, Var b, int scales, double peak) {
  if (a.shape() != b.shape()) fail(ErrorKind::ShapeError, "ms_ssim: " + a.shape().str() + " vs " + b.shape().str());
  check_scales(a.shape(), scales);
  const auto win = ssim_window();
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  std::vector<double> weights(kMsSsimWeights.begin(), kMsSsimWeights.begin() + scales);
  double wsum = 0;
  for (double w : weights) wsum += w;
  for (double& w : weights) w /= wsum;

  std::vector<Var> terms;
  for (int s = 0; s < scales; ++s) {
    if (s > 0) {
      a = avg_pool2(a);
      b = avg_pool2(b);
    }
    Var mu_a = separable_filter_valid(a, win);
    Var mu_b = separable_filter_valid(b, win);
    Var mu_aa = square(mu_a);
    Var mu_bb = square(mu_b);
    Var mu_ab = mul(mu_a, mu_b);
    Var var_a = sub(separable_filter_valid(square(a), win), mu_aa);
    Var var_b = sub(separable_filter_valid(square(b), win), mu_bb);
    Var cov = sub(separable_filter_valid(mul(a, b), win), mu_ab);
    Var cs_map = div(add_scalar(scale(cov, 2.0), c2), add_scalar(add(var_a, var_b), c2));
    if (s + 1 < scales) {
      terms.push_back(mean(cs_map));
    } else {
      Var l_map = div(add_scalar(scale(mu_ab, 2.0), c1), add_scalar(add(mu_aa, mu_bb), c1));
      terms.push_back(mean(mul(l_map, cs_map)));
    }
  }
  return weighted_product(terms, weights);
}

}  // namespace ad

double ms_ssim(const Tensor& a, const Tensor& b, int scales, double peak) {
  Tape t;
  return ad::ms_ssim(t.constant(a), t.constant(b), scales, peak).value()[0];
}

std::string_view to_string(DbConvention c) {
  return c == DbConvention::paper_literal ? "paper_literal" : "one_minus";
}

double db_msssim(double m, DbConvention convention) {
  if (convention == DbConvention::paper_literal) {
    if (!(m > 0 && m <= 1)) fail(ErrorKind::DomainError, "paper_literal dB needs 0 < MS-SSIM <= 1");
    return -10.0 * std::log10(m);
  }
  if (!(m >= 0 && m < 1)) fail(ErrorKind::DomainError, "one_minus dB needs 0 <= MS-SSIM < 1");
  return -10.0 * std::log10(1.0 - m);
}

QualityScore score_quality(const Tensor& original, const Tensor& reconstruction) {
  const Tensor r8 = requantize8(reconstruction);
  const MsePsnr mp = mse_psnr(original, r8, 1.0);
  QualityScore q;
  q.mse = mp.mse;
  q.psnr_db = mp.psnr_db;
  q.ms_ssim_scales = max_msssim_scales(original.h(), original.w());
  if (q.ms_ssim_scales > 0) {
    q.ms_ssim = ms_ssim(original, r8, q.ms_ssim_scales);
    q.ms_ssim_db_paper = q.ms_ssim > 0 ? db_msssim(std::min(q.ms_ssim, 1.0), DbConvention::paper_literal) : kPsnrInfinity;
    q.ms_ssim_db_conv = q.ms_ssim < 1 ? db_msssim(std::max(q.ms_ssim, 0.0), DbConvention::one_minus) : kPsnrInfinity;
  }
  return q;
}

}  // namespace cenic
