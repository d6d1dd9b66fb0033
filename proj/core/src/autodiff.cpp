#include "cenic/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "cenic/conv.hpp"

namespace cenic {

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.op = requires_grad ? "param" : "const";
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::check(Var v) const {
  if (v.tape_ != this || v.id_ < 0 || v.id_ >= static_cast<int>(nodes_.size()))
    fail(ErrorKind::InputError, "variable does not belong to this tape");
}

const Tensor& Tape::value(Var v) const {
  check(v);
  return nodes_[v.id_].value;
}

bool Tape::requires_grad(Var v) const {
  check(v);
  return nodes_[v.id_].requires_grad;
}

Var Tape::record(std::string op, Tensor value, std::vector<Var> parents, BackwardFn backward) {
  Node n;
  n.op = std::move(op);
  n.value = std::move(value);
  for (const Var& p : parents) {
    check(p);
    n.requires_grad = n.requires_grad || nodes_[p.id_].requires_grad;
  }
  n.parents = std::move(parents);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record_nondifferentiable(std::string op, Tensor value, std::vector<Var> parents) {
  Var v = record(std::move(op), std::move(value), std::move(parents), nullptr);
  nodes_[v.id_].differentiable = false;
  return v;
}

void Tape::accumulate(Var v, const Tensor& g) {
  check(v);
  Node& n = nodes_[v.id_];
  if (!n.requires_grad) return;
  if (g.shape() != n.value.shape())
    fail(ErrorKind::ShapeError, "cotangent " + g.shape().str() + " for node '" + n.op + "' of shape " +
                                    n.value.shape().str());
  if (n.grad.empty()) {
    n.grad = g;
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) n.grad[i] += g[i];
}

void Tape::backward(Var output, const Tensor& seed) {
  check(output);
  for (Node& n : nodes_) n.grad = Tensor();
  accumulate(output, seed);
  for (int id = output.id_; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (!n.differentiable)
      fail(ErrorKind::NotDifferentiable, "gradient reached non-differentiable op '" + n.op + "'");
    if (n.backward) {
      // Copy: the callback accumulates into other nodes of the same vector.
      const Tensor g = n.grad;
      n.backward(*this, g);
    }
  }
}

void Tape::backward(Var scalar_output) {
  const Tensor& v = value(scalar_output);
  if (v.size() != 1) fail(ErrorKind::ShapeError, "backward() without seed needs a scalar output");
  backward(scalar_output, Tensor(v.shape(), 1.0));
}

Tensor Tape::grad(Var v) const {
  check(v);
  const Node& n = nodes_[v.id_];
  return n.grad.empty() ? Tensor(n.value.shape()) : n.grad;
}

std::vector<Tensor> vjp(Tape& tape, Var output, const Tensor& upstream, std::span<const Var> wrt) {
  tape.backward(output, upstream);
  std::vector<Tensor> out;
  out.reserve(wrt.size());
  for (const Var& v : wrt) out.push_back(tape.grad(v));
  return out;
}

namespace ad {

namespace {

bool is_scalar(const Shape& s) { return s.size() == 1; }

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  if (a == b) return a;
  if (is_scalar(b)) return a;
  if (is_scalar(a)) return b;
  fail(ErrorKind::ShapeError, std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str());
}

// Reduces a full-shape cotangent to the operand's shape (sum over broadcast).
Tensor reduce_to(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  double s = 0;
  for (double v : g.data()) s += v;
  return Tensor(target, s);
}

template <typename F>
Tensor binary_map(const Tensor& a, const Tensor& b, const Shape& out, F f) {
  Tensor r(out);
  const bool sa = a.shape() != out;
  const bool sb = b.shape() != out;
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = f(sa ? a[0] : a[i], sb ? b[0] : b[i]);
  return r;
}

template <typename F>
Tensor unary_map(const Tensor& a, F f) {
  Tensor r(a.shape());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = f(a[i]);
  return r;
}

}  // namespace

Var add(Var a, Var b) {
  Tape& t = *a.tape();
  const Shape s = broadcast_shape(a.shape(), b.shape(), "add");
  Tensor v = binary_map(a.value(), b.value(), s, [](double x, double y) { return x + y; });
  return t.record("add", std::move(v), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    tp.accumulate(a, reduce_to(g, a.shape()));
    tp.accumulate(b, reduce_to(g, b.shape()));
  });
}

Var sub(Var a, Var b) {
  Tape& t = *a.tape();
  const Shape s = broadcast_shape(a.shape(), b.shape(), "sub");
  Tensor v = binary_map(a.value(), b.value(), s, [](double x, double y) { return x - y; });
  return t.record("sub", std::move(v), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    tp.accumulate(a, reduce_to(g, a.shape()));
    Tensor ng = unary_map(g, [](double x) { return -x; });
    tp.accumulate(b, reduce_to(ng, b.shape()));
  });
}

Var mul(Var a, Var b) {
  Tape& t = *a.tape();
  const Shape s = broadcast_shape(a.shape(), b.shape(), "mul");
  Tensor v = binary_map(a.value(), b.value(), s, [](double x, double y) { return x * y; });
  return t.record("mul", std::move(v), {a, b}, [a, b, s](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(a);
    const Tensor& bv = tp.value(b);
    if (tp.requires_grad(a))
      tp.accumulate(a, reduce_to(binary_map(g, bv, s, [](double x, double y) { return x * y; }),
                                 av.shape()));
    if (tp.requires_grad(b))
      tp.accumulate(b, reduce_to(binary_map(g, av, s, [](double x, double y) { return x * y; }),
                                 bv.shape()));
  });
}

Var div(Var a, Var b) {
  Tape& t = *a.tape();
  const Shape s = broadcast_shape(a.shape(), b.shape(), "div");
  Tensor v = binary_map(a.value(), b.value(), s, [](double x, double y) { return x / y; });
  return t.record("div", std::move(v), {a, b}, [a, b, s](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(a);
    const Tensor& bv = tp.value(b);
    if (tp.requires_grad(a))
      tp.accumulate(a, reduce_to(binary_map(g, bv, s, [](double x, double y) { return x / y; }),
                                 av.shape()));
    if (tp.requires_grad(b)) {
      // d(a/b)/db = -a / b^2
      Tensor q = binary_map(av, bv, s, [](double x, double y) { return -x / (y * y); });
      for (std::size_t i = 0; i < q.size(); ++i) q[i] *= g[i];
      tp.accumulate(b, reduce_to(q, bv.shape()));
    }
  });
}

Var scale(Var a, double s) {
  Tensor v = unary_map(a.value(), [s](double x) { return x * s; });
  return a.tape()->record("scale", std::move(v), {a}, [a, s](Tape& tp, const Tensor& g) {
    tp.accumulate(a, unary_map(g, [s](double x) { return x * s; }));
  });
}

Var add_scalar(Var a, double s) {
  Tensor v = unary_map(a.value(), [s](double x) { return x + s; });
  return a.tape()->record("add_scalar", std::move(v), {a},
                          [a](Tape& tp, const Tensor& g) { tp.accumulate(a, g); });
}

Var square(Var a) {
  Tensor v = unary_map(a.value(), [](double x) { return x * x; });
  return a.tape()->record("square", std::move(v), {a}, [a](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(a);
    Tensor r(g.shape());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = 2.0 * av[i] * g[i];
    tp.accumulate(a, r);
  });
}

Var abs(Var a) {
  Tensor v = unary_map(a.value(), [](double x) { return std::abs(x); });
  return a.tape()->record("abs", std::move(v), {a}, [a](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(a);
    Tensor r(g.shape());
    for (std::size_t i = 0; i < r.size(); ++i)
      r[i] = av[i] > 0 ? g[i] : (av[i] < 0 ? -g[i] : 0.0);
    tp.accumulate(a, r);
  });
}

Var relu(Var a) {
  Tensor v = unary_map(a.value(), [](double x) { return x > 0 ? x : 0.0; });
  return a.tape()->record("relu", std::move(v), {a}, [a](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(a);
    Tensor r(g.shape());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = av[i] > 0 ? g[i] : 0.0;
    tp.accumulate(a, r);
  });
}

Var exp(Var a) {
  Tensor v = unary_map(a.value(), [](double x) { return std::exp(x); });
  return a.tape()->record("exp", std::move(v), {a}, [a](Tape& tp, const Tensor& g) {
    const Tensor& av = tp.value(a);
    Tensor r(g.shape());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::exp(av[i]) * g[i];
    tp.accumulate(a, r);
  });
}

Var pow(Var a, double p) {
  const Tensor& av = a.value();
  for (double x : av.data())
    if (x < 0) fail(ErrorKind::DomainError, "pow of negative base");
  Tensor v = unary_map(av, [p](double x) { return std::pow(x, p); });
  return a.tape()->record("pow", std::move(v), {a}, [a, p](Tape& tp, const Tensor& g) {
    const Tensor& x = tp.value(a);
    Tensor r(g.shape());
    for (std::size_t i = 0; i < r.size(); ++i)
      r[i] = x[i] > 0 ? p * std::pow(x[i], p - 1.0) * g[i] : 0.0;
    tp.accumulate(a, r);
  });
}

Var sum(Var a) {
  double s = 0;
  for (double x : a.value().data()) s += x;
  return a.tape()->record("sum", Tensor::scalar(s), {a}, [a](Tape& tp, const Tensor& g) {
    tp.accumulate(a, Tensor(tp.value(a).shape(), g[0]));
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var mse(Var a, Var b) { return mean(square(sub(a, b))); }

Var conv2d(Var x, Var kernel, Var bias, int stride) {
  ConvWeights w{kernel.value(), bias.value()};
  Tensor out = cenic::conv2d(x.value(), w, stride);
  return x.tape()->record(
      "conv2d", std::move(out), {x, kernel, bias}, [x, kernel, bias, stride](Tape& tp, const Tensor& g) {
        ConvWeights wt{tp.value(kernel), tp.value(bias)};
        ConvGrads<double> gr = conv2d_backward(tp.value(x), wt, stride, g, tp.requires_grad(x));
        if (tp.requires_grad(x)) tp.accumulate(x, gr.input);
        tp.accumulate(kernel, gr.kernel);
        tp.accumulate(bias, gr.bias);
      });
}

Var deconv2d(Var x, Var kernel, Var bias, int stride) {
  ConvWeights w{kernel.value(), bias.value()};
  Tensor out = cenic::deconv2d(x.value(), w, stride);
  return x.tape()->record(
      "deconv2d", std::move(out), {x, kernel, bias},
      [x, kernel, bias, stride](Tape& tp, const Tensor& g) {
        ConvWeights wt{tp.value(kernel), tp.value(bias)};
        ConvGrads<double> gr = deconv2d_backward(tp.value(x), wt, stride, g, tp.requires_grad(x));
        if (tp.requires_grad(x)) tp.accumulate(x, gr.input);
        tp.accumulate(kernel, gr.kernel);
        tp.accumulate(bias, gr.bias);
      });
}

Var add_noise(Var x, const Tensor& noise) {
  if (noise.shape() != x.shape()) fail(ErrorKind::ShapeError, "add_noise: noise shape mismatch");
  Tensor v = x.value();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += noise[i];
  return x.tape()->record("add_noise", std::move(v), {x},
                          [x](Tape& tp, const Tensor& g) { tp.accumulate(x, g); });
}

Var avg_pool2(Var x) {
  const Shape s = x.shape();
  const int oh = s.h / 2;
  const int ow = s.w / 2;
  if (oh < 1 || ow < 1) fail(ErrorKind::ShapeError, "avg_pool2 on " + s.str());
  const Tensor& xv = x.value();
  Tensor out(Shape{s.n, s.c, oh, ow});
  for (int b = 0; b < s.n; ++b)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx)
          out.at(b, c, y, xx) = 0.25 * (xv.at(b, c, 2 * y, 2 * xx) + xv.at(b, c, 2 * y, 2 * xx + 1) +
                                        xv.at(b, c, 2 * y + 1, 2 * xx) +
                                        xv.at(b, c, 2 * y + 1, 2 * xx + 1));
  return x.tape()->record("avg_pool2", std::move(out), {x}, [x, s, oh, ow](Tape& tp, const Tensor& g) {
    Tensor r(s);
    for (int b = 0; b < s.n; ++b)
      for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < oh; ++y)
          for (int xx = 0; xx < ow; ++xx) {
            const double q = 0.25 * g.at(b, c, y, xx);
            r.at(b, c, 2 * y, 2 * xx) += q;
            r.at(b, c, 2 * y, 2 * xx + 1) += q;
            r.at(b, c, 2 * y + 1, 2 * xx) += q;
            r.at(b, c, 2 * y + 1, 2 * xx + 1) += q;
          }
    tp.accumulate(x, r);
  });
}

Var separable_filter_valid(Var x, std::span<const double> window) {
  const Shape s = x.shape();
  const int k = static_cast<int>(window.size());
  const int oh = s.h - k + 1;
  const int ow = s.w - k + 1;
  if (oh < 1 || ow < 1)
    fail(ErrorKind::ScaleError, "filter window " + std::to_string(k) + " larger than " + s.str());
  std::vector<double> win(window.begin(), window.end());
  const Tensor& xv = x.value();
  Tensor out(Shape{s.n, s.c, oh, ow});
  std::vector<double> tmp(static_cast<std::size_t>(s.h) * ow);
  for (int b = 0; b < s.n; ++b)
    for (int c = 0; c < s.c; ++c) {
      const double* src = xv.plane(b, c);
      for (int y = 0; y < s.h; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          double acc = 0;
          for (int t = 0; t < k; ++t) acc += win[t] * src[y * s.w + xx + t];
          tmp[static_cast<std::size_t>(y) * ow + xx] = acc;
        }
      double* dst = out.plane(b, c);
      for (int y = 0; y < oh; ++y)
        for (int xx = 0; xx < ow; ++xx) {
          double acc = 0;
          for (int t = 0; t < k; ++t) acc += win[t] * tmp[static_cast<std::size_t>(y + t) * ow + xx];
          dst[y * ow + xx] = acc;
        }
    }
  return x.tape()->record(
      "separable_filter", std::move(out), {x}, [x, s, win, k, oh, ow](Tape& tp, const Tensor& g) {
        Tensor r(s);
        std::vector<double> tmp(static_cast<std::size_t>(s.h) * ow);
        for (int b = 0; b < s.n; ++b)
          for (int c = 0; c < s.c; ++c) {
            std::fill(tmp.begin(), tmp.end(), 0.0);
            const double* gp = g.plane(b, c);
            for (int y = 0; y < oh; ++y)
              for (int xx = 0; xx < ow; ++xx)
                for (int t = 0; t < k; ++t)
                  tmp[static_cast<std::size_t>(y + t) * ow + xx] += win[t] * gp[y * ow + xx];
            double* dst = r.plane(b, c);
            for (int y = 0; y < s.h; ++y)
              for (int xx = 0; xx < ow; ++xx)
                for (int t = 0; t < k; ++t)
                  dst[y * s.w + xx + t] += win[t] * tmp[static_cast<std::size_t>(y) * ow + xx];
          }
        tp.accumulate(x, r);
      });
}

}  // namespace ad

}  // namespace cenic
