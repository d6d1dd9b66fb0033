#include "cenic/optim.hpp"

#include <cmath>

namespace cenic {

AdamState AdamState::init(std::span<const Tensor* const> params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const Tensor* p : params) {
    s.m.emplace_back(p->shape());
    s.v.emplace_back(p->shape());
  }
  return s;
}

void adam_step(std::span<Tensor* const> params, std::span<const Tensor> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size())
    fail(ErrorKind::ShapeError, "adam_step: " + std::to_string(params.size()) + " params, " +
                                    std::to_string(grads.size()) + " grads, " +
                                    std::to_string(state.m.size()) + " moments");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Shape& s = params[i]->shape();
    if (grads[i].shape() != s || state.m[i].shape() != s || state.v[i].shape() != s)
      fail(ErrorKind::ShapeError, "adam_step: shape mismatch at parameter " + std::to_string(i) +
                                      " (" + s.str() + " vs grad " + grads[i].shape().str() + ")");
  }
  const AdamConfig& c = state.config;
  const std::int64_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double mh = m[j] / bc1;
      const double vh = v[j] / bc2;
      p[j] -= c.lr * mh / (std::sqrt(vh) + c.eps);
    }
  }
  state.step = t;
}

}  // namespace cenic
