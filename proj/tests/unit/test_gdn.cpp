#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cenic/gdn.hpp"
#include "oracles.hpp"

using namespace cenic;

namespace {

GdnParams random_params(int c, GdnMode mode, GdnDirection dir, std::mt19937_64& rng) {
  GdnParams p = gdn_init(c, mode, dir);
  p.beta = oracle::random_tensor<double>({c, 1, 1, 1}, rng, 0.5, 1.5);
  p.gamma = oracle::random_tensor<double>({c, c, 1, 1}, rng, 0.0, 0.3);
  return p;
}

// z_i = x_i / sqrt(beta_i + sum_j gamma_ij x_j^2), written out per pixel.
double classic_pixel(const Tensor& x, const GdnParams& p, int b, int i, int y, int xx) {
  double s = p.beta[i];
  for (int j = 0; j < x.c(); ++j) s += p.gamma.at(i, j, 0, 0) * x.at(b, j, y, xx) * x.at(b, j, y, xx);
  return x.at(b, i, y, xx) / std::sqrt(s);
}

}  // namespace

TEST(Gdn, IdentityWhenGammaZero) {
  std::mt19937_64 rng(1);
  Tensor x = oracle::random_tensor<double>({2, 3, 4, 5}, rng);
  for (GdnMode m : {GdnMode::classic, GdnMode::simplified})
    for (GdnDirection d : {GdnDirection::divide, GdnDirection::multiply}) {
      GdnParams p{Tensor({3, 1, 1, 1}, 1.0), Tensor({3, 3, 1, 1}), m, d};
      EXPECT_EQ(gdn_eval(x, p), x);
    }
}

TEST(Gdn, ScalarValues) {
  Tensor x = Tensor::scalar(3.0);
  GdnParams p{Tensor::scalar(1.0), Tensor::scalar(1.0), GdnMode::classic, GdnDirection::divide};
  EXPECT_NEAR(gdn_eval(x, p).item(), 3.0 / std::sqrt(10.0), 1e-12);
  EXPECT_NEAR(gdn_eval(x, p).item(), 0.94868, 1e-5);
  p.mode = GdnMode::simplified;
  EXPECT_DOUBLE_EQ(gdn_eval(x, p).item(), 0.75);
}

TEST(Gdn, ClassicMatchesPixelFormula) {
  std::mt19937_64 rng(2);
  Tensor x = oracle::random_tensor<double>({2, 5, 3, 4}, rng);
  GdnParams p = random_params(5, GdnMode::classic, GdnDirection::divide, rng);
  Tensor z = gdn_eval(x, p);
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 5; ++i)
      for (int y = 0; y < 3; ++y)
        for (int xx = 0; xx < 4; ++xx) EXPECT_NEAR(z.at(b, i, y, xx), classic_pixel(x, p, b, i, y, xx), 1e-12);
}

TEST(Gdn, GenericExponentsMatchFastPaths) {
  std::mt19937_64 rng(3);
  Tensor x = oracle::random_tensor<double>({1, 6, 5, 5}, rng, -2, 2);
  for (GdnDirection d : {GdnDirection::divide, GdnDirection::multiply}) {
    GdnParams p = random_params(6, GdnMode::simplified, d, rng);
    EXPECT_LT(max_abs_diff(gdn_eval_generic(x, p, 1.0, 1.0), gdn_eval(x, p)), 1e-6);
    p.mode = GdnMode::classic;
    EXPECT_LT(max_abs_diff(gdn_eval_generic(x, p, 2.0, 0.5), gdn_eval(x, p)), 1e-12);
  }
}

TEST(Gdn, FloatAndDoubleAgree) {
  std::mt19937_64 rng(4);
  Tensor x = oracle::random_tensor<double>({1, 4, 6, 6}, rng);
  GdnParams p = random_params(4, GdnMode::classic, GdnDirection::multiply, rng);
  TensorF zf = gdn_eval(x.cast<float>(), p.cast<float>());
  EXPECT_LT(max_abs_diff(zf.cast<double>(), gdn_eval(x, p)), 1e-5);
}

// Both directions share the norm n(x): x / n(x) times x * n(x) is x^2.
TEST(Gdn, MultiplyAndDivideShareNorm) {
  std::mt19937_64 rng(5);
  Tensor x = oracle::random_tensor<double>({1, 4, 6, 6}, rng);
  for (GdnMode m : {GdnMode::classic, GdnMode::simplified}) {
    GdnParams p = random_params(4, m, GdnDirection::divide, rng);
    GdnParams inv = p;
    inv.direction = GdnDirection::multiply;
    Tensor zd = gdn_eval(x, p);
    Tensor zm = gdn_eval(x, inv);
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(zd[k] * zm[k], x[k] * x[k], 1e-12);
  }
}

TEST(Gdn, ComposeIsIdentityForConstantNorm) {
  std::mt19937_64 rng(55);
  Tensor x = oracle::random_tensor<double>({1, 4, 6, 6}, rng);
  for (GdnMode m : {GdnMode::classic, GdnMode::simplified}) {
    GdnParams p{oracle::random_tensor<double>({4, 1, 1, 1}, rng, 0.5, 2.0), Tensor({4, 4, 1, 1}),
                m, GdnDirection::divide};
    GdnParams inv = p;
    inv.direction = GdnDirection::multiply;
    EXPECT_LT(max_abs_diff(gdn_eval(gdn_eval(x, p), inv), x), 1e-5);
  }
}

TEST(Gdn, OutputsFinite) {
  std::mt19937_64 rng(6);
  Tensor x = oracle::random_tensor<double>({1, 3, 8, 8}, rng, -1e3, 1e3);
  GdnParams p = gdn_project(random_params(3, GdnMode::simplified, GdnDirection::divide, rng));
  p.beta = Tensor({3, 1, 1, 1}, kBetaFloor);
  p.gamma = Tensor({3, 3, 1, 1});
  EXPECT_TRUE(gdn_eval(x, p).all_finite());
}

TEST(Gdn, ProjectClampsAndIsIdempotent) {
  GdnParams p{Tensor::scalar(-0.5), Tensor::scalar(-0.1), GdnMode::classic, GdnDirection::divide};
  GdnParams q = gdn_project(p);
  EXPECT_EQ(q.beta.item(), 1e-6);
  EXPECT_EQ(q.gamma.item(), 0.0);
  GdnParams r = gdn_project(q);
  EXPECT_EQ(r.beta, q.beta);
  EXPECT_EQ(r.gamma, q.gamma);
  GdnParams valid = gdn_init(4, GdnMode::classic, GdnDirection::divide);
  EXPECT_EQ(gdn_project(valid).gamma, valid.gamma);
  EXPECT_EQ(gdn_project(valid).beta, valid.beta);
}

TEST(Gdn, ChannelMismatch) {
  GdnParams p = gdn_init(3, GdnMode::classic, GdnDirection::divide);
  try {
    gdn_eval(Tensor({1, 2, 2, 2}), p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ChannelMismatch);
  }
}

TEST(Gdn, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  for (GdnMode m : {GdnMode::classic, GdnMode::simplified})
    for (GdnDirection d : {GdnDirection::divide, GdnDirection::multiply}) {
      Tensor x0 = oracle::random_tensor<double>({1, 3, 4, 4}, rng, 0.1, 1.0);
      for (std::size_t i = 0; i < x0.size(); i += 2) x0[i] = -x0[i];
      GdnParams p = random_params(3, m, d, rng);
      Tensor w = oracle::random_tensor<double>(x0.shape(), rng);
      auto value = [&](const Tensor& x, const Tensor& beta, const Tensor& gamma) {
        GdnParams q = p;
        q.beta = beta;
        q.gamma = gamma;
        return dot(gdn_eval(x, q), w);
      };
      Tape t;
      Var vx = t.leaf(x0);
      Var vb = t.leaf(p.beta);
      Var vg = t.leaf(p.gamma);
      Var z = ad::gdn(vx, vb, vg, m, d);
      EXPECT_LT(max_abs_diff(z.value(), gdn_eval(x0, p)), 1e-12);
      t.backward(z, w);
      EXPECT_LT(oracle::fd_check([&](const Tensor& x) { return value(x, p.beta, p.gamma); }, x0,
                                 t.grad(vx), 10, rng),
                1e-3);
      EXPECT_LT(oracle::fd_check([&](const Tensor& b) { return value(x0, b, p.gamma); }, p.beta,
                                 t.grad(vb), 10, rng),
                1e-3);
      EXPECT_LT(oracle::fd_check([&](const Tensor& g) { return value(x0, p.beta, g); }, p.gamma,
                                 t.grad(vg), 10, rng),
                1e-3);
    }
}

TEST(GdnBench, StructureAndDirection) {
  GdnBenchConfig c;
  c.channels = 16;
  c.height = 32;
  c.width = 32;
  c.reps = 10;
  c.pin_thread = false;
  GdnBenchReport r = gdn_microbench(c);
  EXPECT_EQ(r.stages.size(), 10u);
  int classic = 0;
  for (const auto& s : r.stages) {
    classic += s.variant == "classic";
    EXPECT_GE(s.median_ms, 0.0);
  }
  EXPECT_EQ(classic, 5);
  c.reps = 9;
  EXPECT_THROW(gdn_microbench(c), Error);
}
