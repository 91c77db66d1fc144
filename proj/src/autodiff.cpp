#include "fairdd/autodiff.hpp"

#include <stdexcept>
#include <unordered_set>

#include "fairdd/kernels.hpp"

namespace fairdd {

namespace {

[[noreturn]] void shape_error(const std::string& op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument("autodiff: " + op + ": incompatible shapes " + a.shape_str() +
                              " and " + b.shape_str());
}

NodePtr make_op(Op op, std::vector<NodePtr> parents, double attr = 0.0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->parents = std::move(parents);
  n->attr = attr;
  for (const NodePtr& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  return n;
}

bool is_row_of(const Tensor& row, const Tensor& mat) {
  return row.rows() == 1 && row.cols() == mat.cols();
}

// Computes node->value from parent values. Shared by op construction and
// recompute(), so finite-difference probes re-run the exact forward path.
void eval_node(Node* n) {
  namespace k = kernels;
  switch (n->op) {
    case Op::Leaf:
      return;
    case Op::MatMul: {
      const Tensor& a = n->parents[0]->value;
      const Tensor& b = n->parents[1]->value;
      n->value = Tensor({a.rows(), b.cols()});
      k::matmul_nn(a.data(), b.data(), n->value.data(), a.rows(), a.cols(), b.cols(), false);
      return;
    }
    case Op::Add: {
      const Tensor& a = n->parents[0]->value;
      const Tensor& b = n->parents[1]->value;
      n->value = Tensor(a.shape());
      k::add(a.data(), b.data(), n->value.data(), static_cast<int>(a.size()));
      return;
    }
    case Op::AddRow: {
      const Tensor& a = n->parents[0]->value;
      const Tensor& b = n->parents[1]->value;
      n->value = Tensor(a.shape());
      k::add_row_broadcast(a.data(), b.data(), n->value.data(), a.rows(), a.cols());
      return;
    }
    case Op::Mul: {
      const Tensor& a = n->parents[0]->value;
      const Tensor& b = n->parents[1]->value;
      n->value = Tensor(a.shape());
      k::mul(a.data(), b.data(), n->value.data(), static_cast<int>(a.size()));
      return;
    }
    case Op::Scale: {
      const Tensor& a = n->parents[0]->value;
      n->value = Tensor(a.shape());
      k::scale(a.data(), n->attr, n->value.data(), static_cast<int>(a.size()));
      return;
    }
    case Op::Relu: {
      const Tensor& a = n->parents[0]->value;
      n->value = Tensor(a.shape());
      k::relu(a.data(), n->value.data(), static_cast<int>(a.size()));
      return;
    }
    case Op::Exp: {
      const Tensor& a = n->parents[0]->value;
      n->value = Tensor(a.shape());
      k::exp_v(a.data(), n->value.data(), static_cast<int>(a.size()));
      return;
    }
    case Op::Log: {
      const Tensor& a = n->parents[0]->value;
      n->value = Tensor(a.shape());
      k::log_clamped(a.data(), n->value.data(), static_cast<int>(a.size()));
      return;
    }
    case Op::Pow: {
      const Tensor& a = n->parents[0]->value;
      n->value = Tensor(a.shape());
      k::pow_scalar(a.data(), n->attr, n->value.data(), static_cast<int>(a.size()));
      return;
    }
    case Op::Sum: {
      const Tensor& a = n->parents[0]->value;
      n->value = Tensor::scalar(k::sum(a.data(), a.size()));
      return;
    }
    case Op::Mean: {
      const Tensor& a = n->parents[0]->value;
      n->value = Tensor::scalar(k::sum(a.data(), a.size()) / static_cast<double>(a.size()));
      return;
    }
    case Op::Softmax: {
      const Tensor& a = n->parents[0]->value;
      n->value = Tensor(a.shape());
      k::softmax_rows(a.data(), n->value.data(), a.rows(), a.cols());
      return;
    }
    case Op::L2Normalize: {
      const Tensor& a = n->parents[0]->value;
      n->value = Tensor(a.shape());
      k::l2_normalize_rows(a.data(), n->value.data(), a.rows(), a.cols());
      return;
    }
    case Op::ConcatRows: {
      int rows = 0;
      const int cols = n->parents[0]->value.cols();
      for (const NodePtr& p : n->parents) rows += p->value.rows();
      n->value = Tensor({rows, cols});
      double* out = n->value.data();
      for (const NodePtr& p : n->parents) {
        const Tensor& t = p->value;
        for (std::size_t i = 0; i < t.size(); ++i) out[i] = t.data()[i];
        out += t.size();
      }
      return;
    }
    case Op::Transpose: {
      const Tensor& a = n->parents[0]->value;
      n->value = Tensor({a.cols(), a.rows()});
      k::transpose(a.data(), n->value.data(), a.rows(), a.cols());
      return;
    }
  }
  throw std::logic_error("autodiff: unknown op");
}

void accumulate_parents(Node* n) {
  namespace k = kernels;
  const Tensor& g = n->grad;
  switch (n->op) {
    case Op::Leaf:
      return;
    case Op::MatMul: {
      Node* pa = n->parents[0].get();
      Node* pb = n->parents[1].get();
      const Tensor& a = pa->value;
      const Tensor& b = pb->value;
      if (pa->requires_grad) {
        pa->ensure_grad();
        k::matmul_nt(g.data(), b.data(), pa->grad.data(), a.rows(), b.cols(), a.cols(), true);
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        k::matmul_tn(a.data(), g.data(), pb->grad.data(), a.cols(), a.rows(), b.cols(), true);
      }
      return;
    }
    case Op::Add: {
      for (int i = 0; i < 2; ++i) {
        Node* p = n->parents[i].get();
        if (!p->requires_grad) continue;
        p->ensure_grad();
        k::axpy(1.0, g.data(), p->grad.data(), static_cast<int>(g.size()));
      }
      return;
    }
    case Op::AddRow: {
      Node* pa = n->parents[0].get();
      Node* pb = n->parents[1].get();
      if (pa->requires_grad) {
        pa->ensure_grad();
        k::axpy(1.0, g.data(), pa->grad.data(), static_cast<int>(g.size()));
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        k::col_sum_acc(g.data(), pb->grad.data(), g.rows(), g.cols());
      }
      return;
    }
    case Op::Mul: {
      Node* pa = n->parents[0].get();
      Node* pb = n->parents[1].get();
      const int len = static_cast<int>(g.size());
      Tensor scratch(g.shape());
      if (pa->requires_grad) {
        pa->ensure_grad();
        k::mul(g.data(), pb->value.data(), scratch.data(), len);
        k::axpy(1.0, scratch.data(), pa->grad.data(), len);
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        k::mul(g.data(), pa->value.data(), scratch.data(), len);
        k::axpy(1.0, scratch.data(), pb->grad.data(), len);
      }
      return;
    }
    case Op::Scale: {
      Node* p = n->parents[0].get();
      if (!p->requires_grad) return;
      p->ensure_grad();
      k::axpy(n->attr, g.data(), p->grad.data(), static_cast<int>(g.size()));
      return;
    }
    case Op::Relu: {
      Node* p = n->parents[0].get();
      if (!p->requires_grad) return;
      p->ensure_grad();
      k::relu_backward(p->value.data(), g.data(), p->grad.data(), static_cast<int>(g.size()));
      return;
    }
    case Op::Exp: {
      Node* p = n->parents[0].get();
      if (!p->requires_grad) return;
      p->ensure_grad();
      const int len = static_cast<int>(g.size());
      Tensor scratch(g.shape());
      k::mul(g.data(), n->value.data(), scratch.data(), len);
      k::axpy(1.0, scratch.data(), p->grad.data(), len);
      return;
    }
    case Op::Log: {
      Node* p = n->parents[0].get();
      if (!p->requires_grad) return;
      p->ensure_grad();
      k::log_clamped_backward(p->value.data(), g.data(), p->grad.data(), static_cast<int>(g.size()));
      return;
    }
    case Op::Pow: {
      Node* p = n->parents[0].get();
      if (!p->requires_grad) return;
      p->ensure_grad();
      k::pow_scalar_backward(p->value.data(), n->attr, g.data(), p->grad.data(), static_cast<int>(g.size()));
      return;
    }
    case Op::Sum: {
      Node* p = n->parents[0].get();
      if (!p->requires_grad) return;
      p->ensure_grad();
      const double gv = g[0];
      double* dst = p->grad.data();
      for (std::size_t i = 0; i < p->grad.size(); ++i) dst[i] += gv;
      return;
    }
    case Op::Mean: {
      Node* p = n->parents[0].get();
      if (!p->requires_grad) return;
      p->ensure_grad();
      const double gv = g[0] / static_cast<double>(p->value.size());
      double* dst = p->grad.data();
      for (std::size_t i = 0; i < p->grad.size(); ++i) dst[i] += gv;
      return;
    }
    case Op::Softmax: {
      Node* p = n->parents[0].get();
      if (!p->requires_grad) return;
      p->ensure_grad();
      k::softmax_backward(n->value.data(), g.data(), p->grad.data(), g.rows(), g.cols());
      return;
    }
    case Op::L2Normalize: {
      Node* p = n->parents[0].get();
      if (!p->requires_grad) return;
      p->ensure_grad();
      k::l2_normalize_backward(p->value.data(), g.data(), p->grad.data(), g.rows(), g.cols());
      return;
    }
    case Op::ConcatRows: {
      const double* src = g.data();
      for (const NodePtr& part : n->parents) {
        Node* p = part.get();
        const int len = static_cast<int>(p->value.size());
        if (p->requires_grad) {
          p->ensure_grad();
          k::axpy(1.0, src, p->grad.data(), len);
        }
        src += len;
      }
      return;
    }
    case Op::Transpose: {
      Node* p = n->parents[0].get();
      if (!p->requires_grad) return;
      p->ensure_grad();
      Tensor scratch(p->value.shape());
      k::transpose(g.data(), scratch.data(), g.rows(), g.cols());
      k::axpy(1.0, scratch.data(), p->grad.data(), static_cast<int>(scratch.size()));
      return;
    }
  }
  throw std::logic_error("autodiff: unknown op in backward");
}

}  // namespace

void Node::ensure_grad() {
  if (grad.size() != value.size() || grad.shape() != value.shape()) grad = Tensor(value.shape());
}

void Node::zero_grad() {
  if (grad.shape() == value.shape())
    grad.zero();
  else
    grad = Tensor(value.shape());
}

NodePtr make_param(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return n;
}

NodePtr make_const(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return n;
}

NodePtr matmul(const NodePtr& a, const NodePtr& b) {
  if (a->value.rank() != 2 || b->value.rank() != 2 || a->value.cols() != b->value.rows())
    shape_error("matmul", a->value, b->value);
  auto n = make_op(Op::MatMul, {a, b});
  eval_node(n.get());
  return n;
}

NodePtr add(const NodePtr& a, const NodePtr& b) {
  if (a->value.same_shape(b->value)) {
    auto n = make_op(Op::Add, {a, b});
    eval_node(n.get());
    return n;
  }
  if (a->value.rank() == 2 && is_row_of(b->value, a->value)) {
    auto n = make_op(Op::AddRow, {a, b});
    eval_node(n.get());
    return n;
  }
  shape_error("add", a->value, b->value);
}

NodePtr mul(const NodePtr& a, const NodePtr& b) {
  if (!a->value.same_shape(b->value)) shape_error("mul", a->value, b->value);
  auto n = make_op(Op::Mul, {a, b});
  eval_node(n.get());
  return n;
}

NodePtr scale(const NodePtr& a, double c) {
  auto n = make_op(Op::Scale, {a}, c);
  eval_node(n.get());
  return n;
}

NodePtr sub(const NodePtr& a, const NodePtr& b) { return add(a, scale(b, -1.0)); }

#define FAIRDD_UNARY(name, opkind)            \
  NodePtr name(const NodePtr& a) {            \
    auto n = make_op(opkind, {a});            \
    eval_node(n.get());                       \
    return n;                                 \
  }

FAIRDD_UNARY(relu, Op::Relu)
FAIRDD_UNARY(exp, Op::Exp)
FAIRDD_UNARY(log, Op::Log)
FAIRDD_UNARY(sum, Op::Sum)
FAIRDD_UNARY(mean, Op::Mean)
FAIRDD_UNARY(softmax, Op::Softmax)
FAIRDD_UNARY(l2_normalize, Op::L2Normalize)

#undef FAIRDD_UNARY

NodePtr pow(const NodePtr& a, double c) {
  auto n = make_op(Op::Pow, {a}, c);
  eval_node(n.get());
  return n;
}

NodePtr transpose(const NodePtr& a) {
  if (a->value.rank() != 2)
    throw std::invalid_argument("autodiff: transpose needs rank 2, got " + a->value.shape_str());
  auto n = make_op(Op::Transpose, {a});
  eval_node(n.get());
  return n;
}

NodePtr concat_rows(const std::vector<NodePtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("autodiff: concat_rows of nothing");
  const int cols = parts[0]->value.cols();
  for (const NodePtr& p : parts) {
    if (p->value.rank() != 2 || p->value.cols() != cols)
      shape_error("concat_rows", parts[0]->value, p->value);
  }
  auto n = make_op(Op::ConcatRows, std::vector<NodePtr>(parts));
  eval_node(n.get());
  return n;
}

std::vector<Node*> topo_order(const NodePtr& root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* n;
    std::size_t next;
  };
  std::vector<Frame> stack;
  stack.push_back({root.get(), 0});
  visited.insert(root.get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      Node* p = f.n->parents[f.next++].get();
      if (visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }
  return order;
}

void backward(const NodePtr& root) {
  if (root->value.size() != 1)
    throw std::invalid_argument("autodiff: backward root must be scalar, got " +
                                root->value.shape_str());
  std::vector<Node*> order = topo_order(root);
  // Interior gradients restart at zero on every sweep; leaf parameter
  // gradients accumulate across sweeps and are zeroed by the caller.
  for (Node* n : order)
    if (n->op != Op::Leaf) n->zero_grad();
  root->ensure_grad();
  root->grad.fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (!n->requires_grad || n->op == Op::Leaf) continue;
    accumulate_parents(n);
  }
}

void recompute(const NodePtr& root) {
  std::vector<Node*> order = topo_order(root);
  for (Node* n : order)
    if (n->op != Op::Leaf) eval_node(n);
}

}  // namespace fairdd
