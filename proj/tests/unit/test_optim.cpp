#include <gtest/gtest.h>

#include <cmath>

#include "cenic/optim.hpp"

using namespace cenic;

TEST(Adam, FirstStepIsLrTimesSign) {
  Tensor p({1, 1, 1, 4}, std::vector<double>{1.0, -2.0, 0.5, 3.0});
  const Tensor before = p;
  Tensor g({1, 1, 1, 4}, std::vector<double>{0.3, -4.0, 1e-2, -7.5});
  Tensor* params[] = {&p};
  AdamState s = AdamState::init(std::span<const Tensor* const>(params, 1));
  adam_step(params, std::span<const Tensor>(&g, 1), s);
  EXPECT_EQ(s.step, 1);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double expected = -s.config.lr * (g[i] > 0 ? 1.0 : -1.0);
    EXPECT_NEAR(p[i] - before[i], expected, 1e-6 * std::abs(expected));
  }
}

TEST(Adam, ZeroGradientKeepsParams) {
  Tensor p({1, 1, 2, 2}, 0.7);
  Tensor g({1, 1, 2, 2});
  Tensor* params[] = {&p};
  AdamState s = AdamState::init(std::span<const Tensor* const>(params, 1));
  adam_step(params, std::span<const Tensor>(&g, 1), s);
  adam_step(params, std::span<const Tensor>(&g, 1), s);
  EXPECT_EQ(p, Tensor({1, 1, 2, 2}, 0.7));
  EXPECT_EQ(s.step, 2);
}

TEST(Adam, Deterministic) {
  Tensor g({1, 1, 1, 3}, std::vector<double>{0.1, -0.2, 0.3});
  auto run = [&] {
    Tensor p({1, 1, 1, 3}, 1.0);
    Tensor* params[] = {&p};
    AdamState s = AdamState::init(std::span<const Tensor* const>(params, 1));
    for (int i = 0; i < 5; ++i) adam_step(params, std::span<const Tensor>(&g, 1), s);
    return p;
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, ShapeMismatch) {
  Tensor p({1, 1, 2, 2});
  Tensor g({1, 1, 1, 4});
  Tensor* params[] = {&p};
  AdamState s = AdamState::init(std::span<const Tensor* const>(params, 1));
  try {
    adam_step(params, std::span<const Tensor>(&g, 1), s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ShapeError);
  }
  EXPECT_EQ(s.step, 0);
}
