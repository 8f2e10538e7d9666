#include "dndt/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dndt/errors.hpp"
#include "dndt/kernels.hpp"

namespace dndt::ad {
namespace {

using kernels::MatrixView;

struct AxisSplit {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for shape " +
                     shape_to_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Graph& same_graph(Var a, Var b, const char* op) {
  if (!a.graph() || a.graph() != b.graph()) throw ShapeError(std::string(op) + ": operands belong to different graphs");
  return *a.graph();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
}

MatrixView view(const Tensor& t) { return MatrixView::dense(t.values().data(), t.rows(), t.cols()); }

// Rank-1 operands of outer_flatten are treated as a single row.
MatrixView row_view(const Tensor& t) {
  return t.rank() == 1 ? MatrixView::dense(t.values().data(), 1, t.size()) : view(t);
}

Tensor softmax_forward(const Tensor& x, std::size_t axis, bool log_space) {
  const AxisSplit s = split_axis(x.shape(), axis, log_space ? "log_softmax" : "softmax");
  Tensor y = Tensor::zeros(x.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.len * s.inner + i;
      double hi = x[base];
      for (std::size_t k = 1; k < s.len; ++k) hi = std::max(hi, x[base + k * s.inner]);
      double total = 0.0;
      for (std::size_t k = 0; k < s.len; ++k) total += std::exp(x[base + k * s.inner] - hi);
      if (log_space) {
        const double lse = std::log(total);
        for (std::size_t k = 0; k < s.len; ++k) y[base + k * s.inner] = x[base + k * s.inner] - hi - lse;
      } else {
        for (std::size_t k = 0; k < s.len; ++k) y[base + k * s.inner] = std::exp(x[base + k * s.inner] - hi) / total;
      }
    }
  }
  return y;
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Parameter: return "parameter";
    case Op::Add: return "add";
    case Op::Mul: return "mul";
    case Op::MulScalar: return "mul_scalar";
    case Op::MatMul: return "matmul";
    case Op::Softmax: return "softmax";
    case Op::LogSoftmax: return "log_softmax";
    case Op::Log: return "log";
    case Op::Sum: return "sum";
    case Op::OuterFlatten: return "outer_flatten";
    case Op::StraightThrough: return "straight_through";
  }
  return "?";
}

const Tensor& Var::value() const { return graph_->value(*this); }
const Tensor& Var::grad() const { return graph_->grad(*this); }

Var Graph::push(Node node) {
  node.grad = Tensor::zeros(node.value.shape());
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Tensor value) {
  Node n;
  n.op = Op::Constant;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::parameter(Tensor value) {
  Node n;
  n.op = Op::Parameter;
  n.value = std::move(value);
  return push(std::move(n));
}

const Tensor& Graph::value(Var v) const { return nodes_.at(v.id()).value; }
const Tensor& Graph::grad(Var v) const { return nodes_.at(v.id()).grad; }
Op Graph::op(Var v) const { return nodes_.at(v.id()).op; }

void Graph::backward(Var loss) {
  if (loss.graph() != this) throw ShapeError("backward: loss belongs to a different graph");
  const Node& root = nodes_.at(loss.id());
  if (root.value.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " + shape_to_string(root.value.shape()));
  }
  for (Node& n : nodes_) std::fill(n.grad.values().begin(), n.grad.values().end(), 0.0);
  nodes_[loss.id()].grad[0] = 1.0;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (n.arity == 0) continue;
    backprop_node(n);
  }
}

void Graph::backprop_node(const Node& n) {
  const Tensor& g = n.grad;
  switch (n.op) {
    case Op::Constant:
    case Op::Parameter:
      return;
    case Op::Add: {
      for (std::size_t id : {n.lhs, n.rhs}) {
        Tensor& ga = grad_of(id);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      return;
    }
    case Op::Mul: {
      const Tensor& a = nodes_[n.lhs].value;
      const Tensor& b = nodes_[n.rhs].value;
      Tensor& ga = grad_of(n.lhs);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b[i];
      Tensor& gb = grad_of(n.rhs);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a[i];
      return;
    }
    case Op::MulScalar: {
      Tensor& ga = grad_of(n.lhs);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += n.scalar * g[i];
      return;
    }
    case Op::MatMul: {
      const Tensor& a = nodes_[n.lhs].value;
      const Tensor& b = nodes_[n.rhs].value;
      // dA = G * B^T, dB = A^T * G
      kernels::omp::gemm(view(g), view(b).transposed(), grad_of(n.lhs).values(), true);
      kernels::omp::gemm(view(a).transposed(), view(g), grad_of(n.rhs).values(), true);
      return;
    }
    case Op::Softmax:
    case Op::LogSoftmax: {
      const Tensor& y = n.value;
      const AxisSplit s = split_axis(y.shape(), *n.axis, op_name(n.op));
      Tensor& ga = grad_of(n.lhs);
      for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          const std::size_t base = o * s.len * s.inner + i;
          if (n.op == Op::Softmax) {
            double dot = 0.0;
            for (std::size_t k = 0; k < s.len; ++k) dot += g[base + k * s.inner] * y[base + k * s.inner];
            for (std::size_t k = 0; k < s.len; ++k) {
              const std::size_t at = base + k * s.inner;
              ga[at] += y[at] * (g[at] - dot);
            }
          } else {
            double total = 0.0;
            for (std::size_t k = 0; k < s.len; ++k) total += g[base + k * s.inner];
            for (std::size_t k = 0; k < s.len; ++k) {
              const std::size_t at = base + k * s.inner;
              ga[at] += g[at] - std::exp(y[at]) * total;
            }
          }
        }
      }
      return;
    }
    case Op::Log: {
      const Tensor& a = nodes_[n.lhs].value;
      Tensor& ga = grad_of(n.lhs);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / a[i];
      return;
    }
    case Op::Sum: {
      Tensor& ga = grad_of(n.lhs);
      if (!n.axis) {
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
        return;
      }
      const AxisSplit s = split_axis(ga.shape(), *n.axis, "sum");
      for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t k = 0; k < s.len; ++k)
          for (std::size_t i = 0; i < s.inner; ++i) ga[(o * s.len + k) * s.inner + i] += g[o * s.inner + i];
      return;
    }
    case Op::OuterFlatten: {
      const Tensor& a = nodes_[n.lhs].value;
      const Tensor& b = nodes_[n.rhs].value;
      kernels::omp::row_outer_backward(row_view(a), row_view(b), g.values(), grad_of(n.lhs).values(),
                                       grad_of(n.rhs).values());
      return;
    }
    case Op::StraightThrough: {
      Tensor& ga = grad_of(n.lhs);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      return;
    }
  }
}

Var add(Var a, Var b) {
  Graph& graph = same_graph(a, b, "add");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same_shape(x, y, "add");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  Graph::Node n;
  n.op = Op::Add;
  n.lhs = a.id();
  n.rhs = b.id();
  n.arity = 2;
  n.value = std::move(out);
  return graph.push(std::move(n));
}

Var mul(Var a, Var b) {
  Graph& graph = same_graph(a, b, "mul");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_same_shape(x, y, "mul");
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  Graph::Node n;
  n.op = Op::Mul;
  n.lhs = a.id();
  n.rhs = b.id();
  n.arity = 2;
  n.value = std::move(out);
  return graph.push(std::move(n));
}

Var mul_scalar(Var a, double s) {
  Graph& graph = *a.graph();
  Tensor out = a.value();
  for (double& v : out.values()) v *= s;
  Graph::Node n;
  n.op = Op::MulScalar;
  n.lhs = a.id();
  n.arity = 1;
  n.scalar = s;
  n.value = std::move(out);
  return graph.push(std::move(n));
}

Var matmul(Var a, Var b) {
  Graph& graph = same_graph(a, b, "matmul");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.rank() != 2 || y.rank() != 2 || x.cols() != y.rows()) {
    throw ShapeError("matmul: shape mismatch " + shape_to_string(x.shape()) + " vs " + shape_to_string(y.shape()));
  }
  Tensor out = Tensor::zeros({x.rows(), y.cols()});
  kernels::omp::gemm(view(x), view(y), out.values());
  Graph::Node n;
  n.op = Op::MatMul;
  n.lhs = a.id();
  n.rhs = b.id();
  n.arity = 2;
  n.value = std::move(out);
  return graph.push(std::move(n));
}

Var softmax(Var a, std::size_t axis) {
  Graph& graph = *a.graph();
  Graph::Node n;
  n.op = Op::Softmax;
  n.lhs = a.id();
  n.arity = 1;
  n.axis = axis;
  n.value = softmax_forward(a.value(), axis, false);
  return graph.push(std::move(n));
}

Var log_softmax(Var a, std::size_t axis) {
  Graph& graph = *a.graph();
  Graph::Node n;
  n.op = Op::LogSoftmax;
  n.lhs = a.id();
  n.arity = 1;
  n.axis = axis;
  n.value = softmax_forward(a.value(), axis, true);
  return graph.push(std::move(n));
}

Var log(Var a) {
  Graph& graph = *a.graph();
  Tensor out = a.value();
  for (double& v : out.values()) {
    if (!(v > 0.0)) throw NumericError("log: non-positive input " + std::to_string(v));
    v = std::log(v);
  }
  Graph::Node n;
  n.op = Op::Log;
  n.lhs = a.id();
  n.arity = 1;
  n.value = std::move(out);
  return graph.push(std::move(n));
}

Var sum(Var a) {
  Graph& graph = *a.graph();
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  Graph::Node n;
  n.op = Op::Sum;
  n.lhs = a.id();
  n.arity = 1;
  n.value = Tensor::scalar(total);
  return graph.push(std::move(n));
}

Var sum(Var a, std::size_t axis) {
  Graph& graph = *a.graph();
  const Tensor& x = a.value();
  const AxisSplit s = split_axis(x.shape(), axis, "sum");
  Shape shape = x.shape();
  shape.erase(shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor out = Tensor::zeros(shape);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t k = 0; k < s.len; ++k)
      for (std::size_t i = 0; i < s.inner; ++i) out[o * s.inner + i] += x[(o * s.len + k) * s.inner + i];
  Graph::Node n;
  n.op = Op::Sum;
  n.lhs = a.id();
  n.arity = 1;
  n.axis = axis;
  n.value = std::move(out);
  return graph.push(std::move(n));
}

Var outer_flatten(Var a, Var b) {
  Graph& graph = same_graph(a, b, "outer_flatten");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  const bool vectors = x.rank() == 1 && y.rank() == 1;
  const bool matrices = x.rank() == 2 && y.rank() == 2 && x.rows() == y.rows();
  if (!vectors && !matrices) {
    throw ShapeError("outer_flatten: shape mismatch " + shape_to_string(x.shape()) + " vs " +
                     shape_to_string(y.shape()));
  }
  const MatrixView xa = row_view(x);
  const MatrixView yb = row_view(y);
  Tensor out = vectors ? Tensor::zeros({x.size() * y.size()}) : Tensor::zeros({x.rows(), x.cols() * y.cols()});
  kernels::omp::row_outer(xa, yb, out.values());
  Graph::Node n;
  n.op = Op::OuterFlatten;
  n.lhs = a.id();
  n.rhs = b.id();
  n.arity = 2;
  n.value = std::move(out);
  return graph.push(std::move(n));
}

Var straight_through(Var soft, Tensor hard) {
  Graph& graph = *soft.graph();
  require_same_shape(soft.value(), hard, "straight_through");
  Graph::Node n;
  n.op = Op::StraightThrough;
  n.lhs = soft.id();
  n.arity = 1;
  n.value = std::move(hard);
  return graph.push(std::move(n));
}

}  // namespace dndt::ad
