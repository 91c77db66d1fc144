#include "fairdd/losses.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fairdd {

namespace {

void check_probability_rows(const Tensor& t, const std::string& what) {
  if (t.rank() != 2)
    throw std::invalid_argument("losses: " + what + " must be rank 2, got " + t.shape_str());
  for (int r = 0; r < t.rows(); ++r) {
    double s = 0.0;
    for (int c = 0; c < t.cols(); ++c) s += t.at(r, c);
    if (std::abs(s - 1.0) > 1e-6)
      throw std::invalid_argument("losses: " + what + " row " + std::to_string(r) +
                                  " sums to " + std::to_string(s) + ", expected 1");
  }
}

}  // namespace

void LossWeights::validate() const {
  if (alpha < 0.0 || beta < 0.0)
    throw std::invalid_argument("losses: weights alpha/beta must be nonnegative");
  if (!(tau > 0.0)) throw std::invalid_argument("losses: tau must be positive");
  if (!(temperature > 0.0)) throw std::invalid_argument("losses: temperature must be positive");
}

Tensor one_hot(const std::vector<int>& labels, int num_classes) {
  const int n = static_cast<int>(labels.size());
  Tensor t({n, num_classes});
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw std::invalid_argument("losses: label " + std::to_string(labels[i]) +
                                  " outside [0, " + std::to_string(num_classes) + ")");
    t.at(i, labels[i]) = 1.0;
  }
  return t;
}

NodePtr cross_entropy(const Tensor& targets, const NodePtr& probs) {
  if (!targets.same_shape(probs->value))
    throw std::invalid_argument("losses: cross_entropy shapes " + targets.shape_str() + " vs " +
                                probs->value.shape_str());
  check_probability_rows(targets, "cross_entropy targets");
  check_probability_rows(probs->value, "cross_entropy probs");
  const double n = static_cast<double>(targets.rows());
  return scale(sum(mul(make_const(targets), log(probs))), -1.0 / n);
}

NodePtr supcon(const NodePtr& embeddings, const std::vector<int>& labels, double tau) {
  const Tensor& z = embeddings->value;
  if (z.rank() != 2) throw std::invalid_argument("losses: supcon embeddings must be rank 2");
  const int n = z.rows();
  if (n < 2) throw std::invalid_argument("losses: supcon needs at least 2 samples");
  if (static_cast<int>(labels.size()) != n)
    throw std::invalid_argument("losses: supcon got " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(n) + " embeddings");
  if (!(tau > 0.0)) throw std::invalid_argument("losses: tau must be positive");
  for (int r = 0; r < n; ++r) {
    double s = 0.0;
    for (int c = 0; c < z.cols(); ++c) s += z.at(r, c) * z.at(r, c);
    if (std::abs(std::sqrt(s) - 1.0) > 1e-6)
      throw std::invalid_argument("losses: supcon embedding row " + std::to_string(r) +
                                  " is not unit length");
  }

  // Positive-pair weights 1/|P(i)| and the off-diagonal contrast mask.
  Tensor off_diag({n, n});
  Tensor pos_weight({n, n});
  Tensor anchor_active({n, 1});
  for (int i = 0; i < n; ++i) {
    int positives = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      off_diag.at(i, j) = 1.0;
      if (labels[j] == labels[i]) ++positives;
    }
    if (positives > 0) {
      anchor_active.at(i, 0) = 1.0;
      for (int j = 0; j < n; ++j)
        if (j != i && labels[j] == labels[i]) pos_weight.at(i, j) = 1.0 / positives;
    }
  }

  NodePtr sims = scale(matmul(embeddings, transpose(embeddings)), 1.0 / tau);
  NodePtr denom = matmul(mul(exp(sims), make_const(off_diag)), make_const(Tensor::ones_col(n)));
  NodePtr log_denom_term = sum(mul(log(denom), make_const(anchor_active)));
  NodePtr positive_term = sum(mul(sims, make_const(pos_weight)));
  return sub(log_denom_term, positive_term);
}

SpdLoss spd_loss(const NodePtr& probs, const std::vector<int>& attrs) {
  const Tensor& q = probs->value;
  check_probability_rows(q, "spd probs");
  const int n = q.rows();
  if (static_cast<int>(attrs.size()) != n)
    throw std::invalid_argument("losses: spd got " + std::to_string(attrs.size()) +
                                " attributes for " + std::to_string(n) + " rows");
  int n0 = 0, n1 = 0;
  for (int a : attrs) {
    if (a == 0)
      ++n0;
    else if (a == 1)
      ++n1;
    else
      throw std::invalid_argument("losses: spd attribute must be 0 or 1, got " + std::to_string(a));
  }
  if (n0 == 0 || n1 == 0) return {make_const(Tensor::scalar(0.0)), true};

  // Group-mean difference as a single constant row: w * q = mean_0(q) - mean_1(q).
  Tensor w({1, n});
  for (int i = 0; i < n; ++i) w.at(0, i) = attrs[i] == 0 ? 1.0 / n0 : -1.0 / n1;
  NodePtr diff = matmul(make_const(w), probs);
  return {sum(mul(diff, diff)), false};
}

Tensor temper_rows(const Tensor& probs, double temperature) {
  check_probability_rows(probs, "temper input");
  if (!(temperature > 0.0)) throw std::invalid_argument("losses: temperature must be positive");
  Tensor out(probs.shape());
  const double inv_t = 1.0 / temperature;
  for (int r = 0; r < probs.rows(); ++r) {
    double s = 0.0;
    for (int c = 0; c < probs.cols(); ++c) {
      out.at(r, c) = std::pow(probs.at(r, c), inv_t);
      s += out.at(r, c);
    }
    for (int c = 0; c < probs.cols(); ++c) out.at(r, c) /= s;
  }
  return out;
}

NodePtr distill(const Tensor& teacher_probs, const NodePtr& student_probs, double temperature) {
  if (!teacher_probs.same_shape(student_probs->value))
    throw std::invalid_argument("losses: distill shapes " + teacher_probs.shape_str() + " vs " +
                                student_probs->value.shape_str());
  check_probability_rows(student_probs->value, "distill student probs");
  const Tensor soft_teacher = temper_rows(teacher_probs, temperature);

  // log of the tempered student row: (1/T) log q - log(rowsum(q^(1/T))),
  // with the rowsum broadcast back over the class axis via a ones row.
  const int u = teacher_probs.cols();
  const double inv_t = 1.0 / temperature;
  NodePtr scaled_log = scale(log(student_probs), inv_t);
  NodePtr row_norm = matmul(pow(student_probs, inv_t), make_const(Tensor::ones_col(u)));
  NodePtr log_norm = matmul(log(row_norm), make_const(Tensor::full({1, u}, 1.0)));
  NodePtr log_soft_student = sub(scaled_log, log_norm);
  return scale(sum(mul(make_const(soft_teacher), log_soft_student)), -1.0);
}

CombinedLoss combine(const NodePtr& ce, const NodePtr& sup, const NodePtr& dis,
                     const NodePtr& spd, const LossWeights& weights) {
  weights.validate();
  if (!ce) throw std::invalid_argument("losses: combine requires a cross-entropy term");

  CombinedLoss out;
  out.parts.ce = ce->value.item();
  NodePtr total = ce;
  double running = out.parts.ce;
  if (sup) {
    out.parts.sup = sup->value.item();
    total = add(total, sup);
    running = running + out.parts.sup;
  }
  if (dis) {
    out.parts.dis = dis->value.item();
    total = add(total, scale(dis, weights.alpha));
    running = running + out.parts.dis * weights.alpha;
  }
  if (spd) {
    out.parts.spd = spd->value.item();
    total = add(total, scale(spd, weights.beta));
    running = running + out.parts.spd * weights.beta;
  }
  out.parts.total = running;
  out.total = total;
  return out;
}

}  // namespace fairdd
