#pragma once

#include <vector>

#include "fairdd/autodiff.hpp"
#include "fairdd/tensor.hpp"

namespace fairdd {

struct LossWeights {
  double alpha = 1.0;        // distillation term weight
  double beta = 1.0;         // statistical-parity term weight
  double tau = 0.07;         // contrastive similarity temperature
  double temperature = 2.0;  // distillation softening temperature

  void validate() const;  // alpha, beta >= 0; tau, temperature > 0
};

struct LossBreakdown {
  double ce = 0.0;
  double sup = 0.0;
  double dis = 0.0;
  double spd = 0.0;
  double total = 0.0;
};

// One-hot rows; also the soft-label identity case of mixup.
Tensor one_hot(const std::vector<int>& labels, int num_classes);

// Mean cross-entropy -(1/N) sum_ij p_ij log q_ij. targets rows and probs rows
// must each sum to 1 (+-1e-6); 0*log(0) contributes 0 via the log clamp.
NodePtr cross_entropy(const Tensor& targets, const NodePtr& probs);

// Supervised contrastive loss over L2-normalized embeddings (unit rows
// required, +-1e-6). Per anchor i with positives P(i) = {p != i : y_p = y_i}
// and contrast set O(i) = {o != i}:
//   -(1/|P(i)|) sum_{p in P(i)} log( exp(s_ip/tau) / sum_{o in O(i)} exp(s_io/tau) )
// summed (not averaged) over anchors; anchors without positives contribute 0.
// N >= 2 required.
NodePtr supcon(const NodePtr& embeddings, const std::vector<int>& labels, double tau);

struct SpdLoss {
  NodePtr value;
  bool single_group = false;  // raised when a group is absent; value is constant 0
};

// Statistical-parity disparity surrogate: per class y, squared gap between the
// two attribute groups' mean predicted probability for y, summed over classes.
// attrs must be 0/1.
SpdLoss spd_loss(const NodePtr& probs, const std::vector<int>& attrs);

// q^(1/T) renormalized over the class axis, row by row. Identical to
// softmax(logits/T) when q = softmax(logits).
Tensor temper_rows(const Tensor& probs, double temperature);

// Distillation loss -sum_ij q't_ij log q's_ij over temperature-softened rows
// (softening per temper_rows, applied to both sides); summed, not averaged.
// The teacher side is a constant: no gradient flows into it.
NodePtr distill(const Tensor& teacher_probs, const NodePtr& student_probs, double temperature);

struct CombinedLoss {
  NodePtr total;
  LossBreakdown parts;
};

// total = ce + sup + alpha*dis + beta*spd. Null terms are skipped (contribute
// exactly 0 and are never evaluated). parts.total reproduces the graph value
// bitwise by following the same association order.
CombinedLoss combine(const NodePtr& ce, const NodePtr& sup, const NodePtr& dis,
                     const NodePtr& spd, const LossWeights& weights);

}  // namespace fairdd
