#pragma once

// Define-by-run reverse-mode automatic differentiation.
//
// A Graph is a tape: nodes are appended in evaluation order, so the reverse of
// insertion order is a valid topological order for backward. Graphs are cheap
// and meant to be rebuilt per mini-batch.

#include <cstddef>
#include <optional>
#include <vector>

#include "dndt/tensor.hpp"

namespace dndt::ad {

enum class Op {
  Constant,
  Parameter,
  Add,
  Mul,
  MulScalar,
  MatMul,
  Softmax,
  LogSoftmax,
  Log,
  Sum,
  OuterFlatten,
  StraightThrough,
};

const char* op_name(Op op);

class Graph;

// Handle to a node of a Graph. Valid as long as the graph is alive.
class Var {
 public:
  Var() = default;

  Graph* graph() const noexcept { return graph_; }
  std::size_t id() const noexcept { return id_; }
  const Tensor& value() const;
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }

 private:
  friend class Graph;
  Var(Graph* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  std::size_t id_ = 0;
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Constants also accumulate gradients (input sensitivities); they differ
  // from parameters only in intent.
  Var constant(Tensor value);
  Var parameter(Tensor value);

  const Tensor& value(Var v) const;
  // Zero tensor before backward() has run.
  const Tensor& grad(Var v) const;
  Op op(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and propagates to every node. Gradients from
  // multiple consumers of a node are summed. Throws ShapeError if loss is not
  // a single value.
  void backward(Var loss);

 private:
  friend Var add(Var, Var);
  friend Var mul(Var, Var);
  friend Var mul_scalar(Var, double);
  friend Var matmul(Var, Var);
  friend Var softmax(Var, std::size_t);
  friend Var log_softmax(Var, std::size_t);
  friend Var log(Var);
  friend Var sum(Var);
  friend Var sum(Var, std::size_t);
  friend Var outer_flatten(Var, Var);
  friend Var straight_through(Var, Tensor);

  struct Node {
    Op op = Op::Constant;
    std::size_t lhs = 0;
    std::size_t rhs = 0;
    std::size_t arity = 0;
    Tensor value;
    Tensor grad;
    double scalar = 0.0;
    std::optional<std::size_t> axis;
  };

  Var push(Node node);
  void backprop_node(const Node& node);
  Tensor& grad_of(std::size_t id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

// Elementwise sum of equal shapes.
Var add(Var a, Var b);
// Elementwise (Hadamard) product of equal shapes.
Var mul(Var a, Var b);
Var mul_scalar(Var a, double s);
// (m x k) * (k x n), rank 2 only.
Var matmul(Var a, Var b);
// Normalizes along `axis` with max subtraction.
Var softmax(Var a, std::size_t axis);
Var log_softmax(Var a, std::size_t axis);
// Natural log; every input value must be positive.
Var log(Var a);
// Sum of all elements, rank 0 result.
Var sum(Var a);
// Reduces `axis`, dropping it from the shape.
Var sum(Var a, std::size_t axis);
// Row-wise Kronecker product: (B x p), (B x q) -> (B x p*q), first operand
// slowest-varying. Rank-1 operands give the plain Kronecker product.
Var outer_flatten(Var a, Var b);
// Forward value is `hard`; backward passes the gradient to `soft` unchanged.
Var straight_through(Var soft, Tensor hard);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(Var a, double s) { return mul_scalar(a, s); }
inline Var operator*(double s, Var a) { return mul_scalar(a, s); }

}  // namespace dndt::ad
