#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fairdd/tensor.hpp"

// Reverse-mode automatic differentiation over a dynamically built DAG.
// Eager evaluation: each op computes its value at construction time and
// records its parents. backward() runs one reverse-topological sweep from a
// scalar root, visiting each node exactly once; gradients accumulate (+=)
// into node .grad, so callers zero parameter gradients between steps.
// One graph is driven by one thread; distinct graphs may live on distinct
// threads (shared state is none).

namespace fairdd {

enum class Op {
  Leaf,
  MatMul,
  Add,          // same shape
  AddRow,       // matrix + row vector broadcast (the only broadcast form)
  Mul,          // elementwise
  Scale,        // * scalar attribute
  Relu,
  Exp,
  Log,          // argument clamped to >= kernels::kLogFloor
  Pow,          // elementwise x^c, scalar attribute c
  Sum,          // full reduction to scalar
  Mean,         // full reduction to scalar
  Softmax,      // over last axis, max-subtracted
  L2Normalize,  // over last axis, norm clamped away from zero
  ConcatRows,   // along first axis
  Transpose,
};

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Tensor value;
  Tensor grad;  // same shape as value, lazily allocated, accumulated by backward()
  Op op = Op::Leaf;
  std::vector<NodePtr> parents;
  double attr = 0.0;  // Scale factor / Pow exponent
  bool requires_grad = false;

  void ensure_grad();
  void zero_grad();
};

// Leaves. Parameters participate in backward(); constants are skipped.
NodePtr make_param(Tensor value);
NodePtr make_const(Tensor value);

NodePtr matmul(const NodePtr& a, const NodePtr& b);
NodePtr add(const NodePtr& a, const NodePtr& b);  // same-shape, or b a row vector
NodePtr mul(const NodePtr& a, const NodePtr& b);
NodePtr scale(const NodePtr& a, double c);
NodePtr sub(const NodePtr& a, const NodePtr& b);  // composition: add(a, scale(b, -1))
NodePtr relu(const NodePtr& a);
NodePtr exp(const NodePtr& a);
NodePtr log(const NodePtr& a);
NodePtr pow(const NodePtr& a, double c);
NodePtr sum(const NodePtr& a);
NodePtr mean(const NodePtr& a);
NodePtr softmax(const NodePtr& a);
NodePtr l2_normalize(const NodePtr& a);
NodePtr concat_rows(const std::vector<NodePtr>& parts);
NodePtr transpose(const NodePtr& a);

// Reverse topological order of the subgraph reachable from root.
std::vector<Node*> topo_order(const NodePtr& root);

// Accumulates d(root)/d(leaf) into .grad of every reachable node that
// requires a gradient. root must be scalar (throws otherwise).
void backward(const NodePtr& root);

// Re-evaluates every non-leaf value reachable from root from current leaf
// values, in topological order. Used by finite-difference probes.
void recompute(const NodePtr& root);

}  // namespace fairdd
