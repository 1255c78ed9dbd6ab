#pragma once

// Reverse-mode automatic differentiation over dense tensors.
//
// A Tape records every operation applied to its values. Nodes are appended in
// evaluation order, so node inputs always refer to earlier nodes and a reverse
// sweep over the node list is a valid topological order for backpropagation.
// Gradients flowing into Parameter leaves are ADDED to Parameter::grad; callers
// zero them explicitly (the optimiser does this after each step).

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "hsic_infogan/errors.hpp"
#include "hsic_infogan/tensor.hpp"

namespace hsic_infogan {

/// A named trainable tensor and its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(0.0); }
};

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

class BackwardContext;
using BackwardFn = std::function<void(BackwardContext&)>;

class Tape {
 public:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  using ParamFilter = std::function<bool(const Parameter&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// A leaf that never receives gradient.
  Var constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, nullptr, false});
    return {this, nodes_.size() - 1};
  }

  /// A leaf bound to a parameter; backward accumulates into `p.grad`.
  Var param(Parameter& p) {
    nodes_.push_back(Node{p.value, {}, nullptr, &p, true});
    return {this, nodes_.size() - 1};
  }

  /// Records an operation. `backward` is only invoked when at least one input
  /// requires a gradient.
  Var push(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
    bool rg = false;
    for (auto i : inputs) rg = rg || nodes_[i].requires_grad;
    nodes_.push_back(Node{std::move(value), std::move(inputs),
                          rg ? std::move(backward) : BackwardFn{}, nullptr, rg});
    return {this, nodes_.size() - 1};
  }

  const Node& node(std::size_t id) const { return nodes_[id]; }
  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  std::size_t size() const { return nodes_.size(); }

  /// Backpropagates from a scalar node. Parameters rejected by `filter` are
  /// left untouched.
  void backward(Var loss, const ParamFilter& filter = {});

 private:
  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape->value(id); }

/// View handed to a backward rule: the upstream gradient plus the node's inputs.
class BackwardContext {
 public:
  BackwardContext(const Tape& tape, const Tape::Node& node, const Tensor& grad,
                  std::vector<Tensor>& grads)
      : tape_(tape), node_(node), grad_(grad), grads_(grads) {}

  const Tensor& grad() const { return grad_; }
  const Tensor& output() const { return node_.value; }
  const Tensor& input(std::size_t k) const { return tape_.value(node_.inputs[k]); }
  bool needs(std::size_t k) const { return tape_.node(node_.inputs[k]).requires_grad; }

  void accumulate(std::size_t k, Tensor g) {
    const std::size_t id = node_.inputs[k];
    if (!tape_.node(id).requires_grad) return;
    if (grads_[id].empty()) {
      grads_[id] = std::move(g);
    } else {
      grads_[id] += g;
    }
  }

 private:
  const Tape& tape_;
  const Tape::Node& node_;
  const Tensor& grad_;
  std::vector<Tensor>& grads_;
};

inline void Tape::backward(Var loss, const ParamFilter& filter) {
  if (loss.tape != this) throw ContractError("backward: loss belongs to another tape");
  if (!value(loss.id).is_scalar()) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_str(value(loss.id).shape()));
  }
  std::vector<Tensor> grads(loss.id + 1);
  grads[loss.id] = Tensor::scalar(1.0);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    if (!n.requires_grad || grads[i].empty()) continue;
    if (n.param != nullptr) {
      if (!filter || filter(*n.param)) n.param->grad += grads[i];
    } else if (n.backward) {
      BackwardContext ctx(*this, n, grads[i], grads);
      n.backward(ctx);
    }
    grads[i] = Tensor{};
  }
}

// ---------------------------------------------------------------------------
// Primitive operations

inline Var matmul(Var a, Var b) {
  Tensor out = gemm(a.value(), b.value());
  return a.tape->push(std::move(out), {a.id, b.id}, [](BackwardContext& c) {
    if (c.needs(0)) c.accumulate(0, gemm_nt(c.grad(), c.input(1)));
    if (c.needs(1)) c.accumulate(1, gemm_tn(c.input(0), c.grad()));
  });
}

enum class CombineKind { add, sub, mul };

inline Var combine(CombineKind kind, Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool same = av.shape() == bv.shape();
  const bool bias = !same && av.rank() >= 1 && bv.rank() == 1 &&
                    bv.shape()[0] == av.shape().back();
  if (!same && !bias) {
    throw DimensionError("combine shape mismatch: " + shape_str(av.shape()) + " vs " +
                         shape_str(bv.shape()));
  }
  const std::size_t width = bias ? bv.size() : av.size();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double x = av[i];
    const double y = bv[i % width];
    switch (kind) {
      case CombineKind::add: out[i] = x + y; break;
      case CombineKind::sub: out[i] = x - y; break;
      case CombineKind::mul: out[i] = x * y; break;
    }
  }
  return a.tape->push(std::move(out), {a.id, b.id}, [kind, width](BackwardContext& c) {
    const Tensor& g = c.grad();
    const Tensor& x = c.input(0);
    const Tensor& y = c.input(1);
    if (c.needs(0)) {
      Tensor ga(x.shape());
      for (std::size_t i = 0; i < g.size(); ++i)
        ga[i] = kind == CombineKind::mul ? g[i] * y[i % width] : g[i];
      c.accumulate(0, std::move(ga));
    }
    if (c.needs(1)) {
      Tensor gb(y.shape());
      for (std::size_t i = 0; i < g.size(); ++i) {
        switch (kind) {
          case CombineKind::add: gb[i % width] += g[i]; break;
          case CombineKind::sub: gb[i % width] -= g[i]; break;
          case CombineKind::mul: gb[i % width] += g[i] * x[i]; break;
        }
      }
      c.accumulate(1, std::move(gb));
    }
  });
}

inline Var add(Var a, Var b) { return combine(CombineKind::add, a, b); }
inline Var sub(Var a, Var b) { return combine(CombineKind::sub, a, b); }
inline Var mul(Var a, Var b) { return combine(CombineKind::mul, a, b); }

struct UnaryOp {
  enum class Kind { exp, log, tanh, sigmoid, leaky_relu, square, negate, scale, softplus };
  Kind kind;
  double param = 0.0;  // leaky_relu slope or scale factor

  static UnaryOp exp() { return {Kind::exp}; }
  static UnaryOp log() { return {Kind::log}; }
  static UnaryOp tanh() { return {Kind::tanh}; }
  static UnaryOp sigmoid() { return {Kind::sigmoid}; }
  static UnaryOp leaky_relu(double alpha) { return {Kind::leaky_relu, alpha}; }
  static UnaryOp square() { return {Kind::square}; }
  static UnaryOp negate() { return {Kind::negate}; }
  static UnaryOp scale(double k) { return {Kind::scale, k}; }
  static UnaryOp softplus() { return {Kind::softplus}; }
};

inline double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + e^x) without overflow.
inline double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline Var map_unary(UnaryOp op, Var a) {
  using K = UnaryOp::Kind;
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    switch (op.kind) {
      case K::exp: out[i] = std::exp(v); break;
      case K::log:
        if (!(v > 0.0)) throw DomainError("log of non-positive entry " + std::to_string(v));
        out[i] = std::log(v);
        break;
      case K::tanh: out[i] = std::tanh(v); break;
      case K::sigmoid: out[i] = stable_sigmoid(v); break;
      case K::leaky_relu: out[i] = v > 0.0 ? v : op.param * v; break;
      case K::square: out[i] = v * v; break;
      case K::negate: out[i] = -v; break;
      case K::scale: out[i] = op.param * v; break;
      case K::softplus: out[i] = stable_softplus(v); break;
    }
  }
  return a.tape->push(std::move(out), {a.id}, [op](BackwardContext& c) {
    const Tensor& g = c.grad();
    const Tensor& x = c.input(0);
    const Tensor& y = c.output();
    Tensor gx(x.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      double d = 0.0;
      switch (op.kind) {
        case K::exp: d = y[i]; break;
        case K::log: d = 1.0 / x[i]; break;
        case K::tanh: d = 1.0 - y[i] * y[i]; break;
        case K::sigmoid: d = y[i] * (1.0 - y[i]); break;
        case K::leaky_relu: d = x[i] > 0.0 ? 1.0 : op.param; break;
        case K::square: d = 2.0 * x[i]; break;
        case K::negate: d = -1.0; break;
        case K::scale: d = op.param; break;
        case K::softplus: d = stable_sigmoid(x[i]); break;
      }
      gx[i] = g[i] * d;
    }
    c.accumulate(0, std::move(gx));
  });
}

inline Var exp(Var a) { return map_unary(UnaryOp::exp(), a); }
inline Var log(Var a) { return map_unary(UnaryOp::log(), a); }
inline Var tanh(Var a) { return map_unary(UnaryOp::tanh(), a); }
inline Var sigmoid(Var a) { return map_unary(UnaryOp::sigmoid(), a); }
inline Var leaky_relu(Var a, double alpha) { return map_unary(UnaryOp::leaky_relu(alpha), a); }
inline Var square(Var a) { return map_unary(UnaryOp::square(), a); }
inline Var negate(Var a) { return map_unary(UnaryOp::negate(), a); }
inline Var scale(Var a, double k) { return map_unary(UnaryOp::scale(k), a); }
inline Var softplus(Var a) { return map_unary(UnaryOp::softplus(), a); }

enum class ReduceKind { sum, mean };

inline Var reduce(ReduceKind kind, Var a) {
  const Tensor& x = a.value();
  double s = 0.0;
  for (double v : x.data()) s += v;
  const double n = static_cast<double>(x.size());
  if (kind == ReduceKind::mean) s /= n;
  return a.tape->push(Tensor::scalar(s), {a.id}, [kind, n](BackwardContext& c) {
    const double g = c.grad().item();
    c.accumulate(0, Tensor(c.input(0).shape(), kind == ReduceKind::mean ? g / n : g));
  });
}

inline Var sum(Var a) { return reduce(ReduceKind::sum, a); }
inline Var mean(Var a) { return reduce(ReduceKind::mean, a); }

/// Mean over rows of -log softmax(logits)[target], targets given as one-hot rows.
inline Var softmax_cross_entropy(Var logits, const Tensor& onehot) {
  const Tensor& z = logits.value();
  if (z.rank() != 2 || onehot.shape() != z.shape()) {
    throw DimensionError("softmax_cross_entropy: logits " + shape_str(z.shape()) +
                         " vs targets " + shape_str(onehot.shape()));
  }
  const std::size_t m = z.rows();
  const std::size_t k = z.cols();
  std::vector<std::size_t> target(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t ones = 0;
    bool valid = true;
    for (std::size_t j = 0; j < k; ++j) {
      const double v = onehot.at(i, j);
      if (v == 1.0) {
        ++ones;
        target[i] = j;
      } else if (v != 0.0) {
        valid = false;
      }
    }
    if (!valid || ones != 1) {
      throw ValidationError("softmax_cross_entropy: row " + std::to_string(i) +
                            " is not a one-hot vector");
    }
  }
  Tensor probs({m, k});
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double mx = z.at(i, 0);
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, z.at(i, j));
    double se = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      probs.at(i, j) = std::exp(z.at(i, j) - mx);
      se += probs.at(i, j);
    }
    for (std::size_t j = 0; j < k; ++j) probs.at(i, j) /= se;
    total += std::log(se) + mx - z.at(i, target[i]);
  }
  const double md = static_cast<double>(m);
  Tape& tape = *logits.tape;
  return tape.push(Tensor::scalar(total / md), {logits.id},
                   [probs = std::move(probs), onehot, md](BackwardContext& c) {
                     const double g = c.grad().item() / md;
                     Tensor gz(probs.shape());
                     for (std::size_t i = 0; i < gz.size(); ++i)
                       gz[i] = g * (probs[i] - onehot[i]);
                     c.accumulate(0, std::move(gz));
                   });
}

/// Column-wise concatenation of matrices with equal row counts.
inline Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  const std::size_t m = parts.front().value().rows();
  std::size_t width = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    if (v.rank() != 2 || v.rows() != m) {
      throw DimensionError("concat leading-dimension mismatch: " + shape_str(v.shape()) +
                           " vs " + std::to_string(m) + " rows");
    }
    ids.push_back(p.id);
    widths.push_back(v.cols());
    width += v.cols();
  }
  Tensor out({m, width});
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& v = p.value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < v.cols(); ++j) out.at(i, off + j) = v.at(i, j);
    off += v.cols();
  }
  return parts.front().tape->push(std::move(out), std::move(ids),
                                  [widths](BackwardContext& c) {
                                    std::size_t o = 0;
                                    for (std::size_t k = 0; k < widths.size(); ++k) {
                                      if (c.needs(k)) c.accumulate(k, col_slice(c.grad(), o, o + widths[k]));
                                      o += widths[k];
                                    }
                                  });
}

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double k, Var a) { return scale(a, k); }

}  // namespace hsic_infogan
