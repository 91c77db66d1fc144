#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fairdd/autodiff.hpp"
#include "fairdd/rng.hpp"
#include "fairdd/tensor.hpp"

#include "support/fd_check.hpp"

using namespace fairdd;
using testsupport::fd_check_param;
using testsupport::fd_check_params;

namespace {

// Random tensor with entries kept away from relu/log kinks so central
// differences stay meaningful.
Tensor random_tensor(Rng& rng, int r, int c, double lo, double hi) {
  Tensor t = Tensor::zeros({r, c});
  for (std::size_t i = 0; i < t.size(); ++i) {
    double v = rng.uniform(lo, hi);
    if (std::abs(v) < 0.05) v = v < 0 ? -0.05 : 0.05;
    t.data()[i] = v;
  }
  return t;
}

}  // namespace

TEST_CASE("every primitive op passes a finite-difference gradient check") {
  Rng rng(101);

  SUBCASE("matmul") {
    auto a = make_param(random_tensor(rng, 4, 3, -1, 1));
    auto b = make_param(random_tensor(rng, 3, 5, -1, 1));
    auto root = mean(matmul(a, b));
    backward(root);
    CHECK(fd_check_params(root, {a, b}).ok);
  }
  SUBCASE("add same-shape and row-broadcast") {
    auto a = make_param(random_tensor(rng, 4, 3, -1, 1));
    auto b = make_param(random_tensor(rng, 4, 3, -1, 1));
    auto row = make_param(random_tensor(rng, 1, 3, -1, 1));
    auto root = mean(add(add(a, b), row));
    backward(root);
    CHECK(fd_check_params(root, {a, b, row}).ok);
  }
  SUBCASE("mul, scale, sub") {
    auto a = make_param(random_tensor(rng, 3, 4, -1, 1));
    auto b = make_param(random_tensor(rng, 3, 4, -1, 1));
    auto root = sum(sub(mul(a, b), scale(a, 0.7)));
    backward(root);
    CHECK(fd_check_params(root, {a, b}).ok);
  }
  SUBCASE("relu away from the kink") {
    auto a = make_param(random_tensor(rng, 5, 4, -1, 1));
    auto root = mean(relu(a));
    backward(root);
    CHECK(fd_check_param(root, a).ok);
  }
  SUBCASE("exp and log") {
    auto a = make_param(random_tensor(rng, 3, 3, 0.2, 2.0));
    auto root = mean(log(exp(a)));
    backward(root);
    CHECK(fd_check_param(root, a).ok);
  }
  SUBCASE("pow on positive bases") {
    auto a = make_param(random_tensor(rng, 3, 4, 0.3, 2.0));
    auto root = sum(pow(a, 0.5));
    backward(root);
    CHECK(fd_check_param(root, a).ok);
    auto b = make_param(random_tensor(rng, 2, 3, 0.3, 2.0));
    auto root2 = sum(pow(b, 3.0));
    backward(root2);
    CHECK(fd_check_param(root2, b).ok);
  }
  SUBCASE("softmax") {
    auto a = make_param(random_tensor(rng, 4, 5, -2, 2));
    // Weight the rows so the gradient is not the trivial all-equal case.
    auto w = make_const(random_tensor(rng, 4, 5, 0.1, 1.0));
    auto root = sum(mul(softmax(a), w));
    backward(root);
    CHECK(fd_check_param(root, a).ok);
  }
  SUBCASE("l2_normalize") {
    auto a = make_param(random_tensor(rng, 4, 6, -2, 2));
    auto w = make_const(random_tensor(rng, 4, 6, 0.1, 1.0));
    auto root = sum(mul(l2_normalize(a), w));
    backward(root);
    CHECK(fd_check_param(root, a).ok);
  }
  SUBCASE("concat_rows and transpose") {
    auto a = make_param(random_tensor(rng, 2, 3, -1, 1));
    auto b = make_param(random_tensor(rng, 4, 3, -1, 1));
    auto w = make_const(random_tensor(rng, 3, 6, 0.1, 1.0));
    auto root = sum(mul(transpose(concat_rows({a, b})), w));
    backward(root);
    CHECK(fd_check_params(root, {a, b}).ok);
  }
  SUBCASE("mean") {
    auto a = make_param(random_tensor(rng, 6, 2, -1, 1));
    auto root = mean(mul(a, a));
    backward(root);
    CHECK(fd_check_param(root, a).ok);
  }
}

TEST_CASE("shared subexpression accumulates gradient from both paths") {
  // z = sum(x*x): dz/dx = 2x exactly.
  Tensor v = Tensor::zeros({2, 3});
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = 0.5 + static_cast<double>(i);
  auto x = make_param(v);
  auto root = sum(mul(x, x));
  backward(root);
  REQUIRE(x->grad.size() == v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(x->grad.data()[i] == doctest::Approx(2.0 * v.data()[i]).epsilon(1e-12));
}

TEST_CASE("diamond graph routes gradient through both branches") {
  // root = sum(relu(x) + 3*x); at x>0 the derivative is 1 + 3 = 4.
  Tensor v = Tensor::full({3, 2}, 1.5);
  auto x = make_param(v);
  auto root = sum(add(relu(x), scale(x, 3.0)));
  backward(root);
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(x->grad.data()[i] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("constants and disconnected parameters receive no gradient") {
  Rng rng(102);
  auto x = make_param(random_tensor(rng, 2, 2, -1, 1));
  auto c = make_const(random_tensor(rng, 2, 2, -1, 1));
  auto orphan = make_param(random_tensor(rng, 2, 2, -1, 1));
  auto root = sum(mul(x, c));
  backward(root);
  CHECK(x->grad.size() == 4);
  CHECK(c->grad.size() == 0);       // constants are skipped entirely
  CHECK(orphan->grad.size() == 0);  // unreachable from root
}

TEST_CASE("backward requires a scalar root") {
  Rng rng(103);
  auto x = make_param(random_tensor(rng, 2, 3, -1, 1));
  auto nonscalar = relu(x);
  CHECK_THROWS_AS(backward(nonscalar), std::invalid_argument);
}

TEST_CASE("backward twice without zeroing doubles the gradient") {
  Rng rng(104);
  auto x = make_param(random_tensor(rng, 2, 2, 0.5, 1.5));
  auto root = sum(mul(x, x));
  backward(root);
  std::vector<double> once(x->grad.data(), x->grad.data() + x->grad.size());
  backward(root);
  for (std::size_t i = 0; i < once.size(); ++i)
    CHECK(x->grad.data()[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-12));
  x->zero_grad();
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(x->grad.data()[i] == 0.0);
}

TEST_CASE("recompute refreshes downstream values after leaves change") {
  Tensor v = Tensor::full({1, 3}, 2.0);
  auto x = make_param(v);
  auto root = sum(pow(x, 2.0));
  CHECK(root->value.item() == doctest::Approx(12.0));
  for (std::size_t i = 0; i < x->value.size(); ++i) x->value.data()[i] = 3.0;
  recompute(root);
  CHECK(root->value.item() == doctest::Approx(27.0));
}

TEST_CASE("topo_order places parents before children") {
  Rng rng(105);
  auto x = make_param(random_tensor(rng, 2, 2, -1, 1));
  auto y = mul(x, x);
  auto root = sum(add(y, x));
  auto order = topo_order(root);
  // Every node appears once, after all of its parents.
  std::vector<const Node*> seen;
  for (const Node* n : order) {
    for (const auto& p : n->parents) {
      bool found = false;
      for (const Node* s : seen)
        if (s == p.get()) found = true;
      CHECK(found);
    }
    seen.push_back(n);
  }
  CHECK(order.back() == root.get());
  CHECK(seen.size() == order.size());
}

TEST_CASE("random composite graphs pass finite-difference checks") {
  // Mix of smooth ops assembled by coin flips; catches wrong parent wiring
  // that single-op tests cannot.
  Rng rng(106);
  for (int trial = 0; trial < 10; ++trial) {
    auto a = make_param(random_tensor(rng, 3, 4, 0.2, 1.5));
    auto b = make_param(random_tensor(rng, 3, 4, 0.2, 1.5));
    NodePtr h = mul(a, b);
    for (int depth = 0; depth < 3; ++depth) {
      switch (static_cast<int>(rng.uniform_int(5))) {
        case 0: h = softmax(h); break;
        case 1: h = l2_normalize(h); break;
        case 2: h = add(h, mul(a, b)); break;
        case 3: h = exp(scale(h, 0.3)); break;
        default: h = pow(add(h, make_const(Tensor::full({3, 4}, 2.0))), 1.5); break;
      }
    }
    auto root = mean(h);
    backward(root);
    auto rep = fd_check_params(root, {a, b});
    CAPTURE(trial);
    CAPTURE(rep.where);
    CAPTURE(rep.worst_rel);
    CHECK(rep.ok);
  }
}
