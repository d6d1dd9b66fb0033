#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cenic/tensor.hpp"

namespace cenic {

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
class Var {
 public:
  Var() = default;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Reverse-mode tape over 64-bit tensors. Nodes are appended in evaluation
// order, so reverse creation order is a valid topological order.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return leaf(std::move(value), false); }

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // Appends an op node. `backward` receives the node's cotangent and must
  // push cotangents to its parents through accumulate().
  Var record(std::string op, Tensor value, std::vector<Var> parents, BackwardFn backward);
  // A node that blocks gradient flow; reaching it during backward() with a
  // gradient-requiring parent raises NotDifferentiable.
  Var record_nondifferentiable(std::string op, Tensor value, std::vector<Var> parents);

  void accumulate(Var v, const Tensor& g);

  void backward(Var output, const Tensor& seed);
  void backward(Var scalar_output);

  // Cotangent of v after backward(); a zero tensor when v was not reached.
  Tensor grad(Var v) const;

 private:
  struct Node {
    std::string op;
    Tensor value;
    Tensor grad;
    std::vector<Var> parents;
    BackwardFn backward;
    bool requires_grad = false;
    bool differentiable = true;
  };

  void check(Var v) const;

  std::vector<Node> nodes_;
};

// Cotangents of `output` w.r.t. each entry of `wrt`, seeded with `upstream`.
std::vector<Tensor> vjp(Tape& tape, Var output, const Tensor& upstream, std::span<const Var> wrt);

namespace ad {

// Binary ops require equal shapes, or one operand of shape 1x1x1x1 (broadcast).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);

Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var square(Var a);
Var abs(Var a);
Var relu(Var a);
Var exp(Var a);
// Elementwise a^p for a >= 0.
Var pow(Var a, double p);

Var sum(Var a);
Var mean(Var a);
Var mse(Var a, Var b);

Var conv2d(Var x, Var kernel, Var bias, int stride);
Var deconv2d(Var x, Var kernel, Var bias, int stride);

// x + noise with the noise held constant.
Var add_noise(Var x, const Tensor& noise);

// 2x2 mean pooling with stride 2; odd trailing rows/columns are dropped.
Var avg_pool2(Var x);

// Per-channel "valid" correlation with the separable window w (outer product w w^T).
Var separable_filter_valid(Var x, std::span<const double> window);

}  // namespace ad

}  // namespace cenic
