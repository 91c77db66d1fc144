#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fairdd/augment.hpp"
#include "fairdd/data.hpp"
#include "fairdd/losses.hpp"
#include "fairdd/metrics.hpp"
#include "fairdd/model.hpp"
#include "fairdd/replay.hpp"
#include "fairdd/rng.hpp"

namespace fairdd {

struct TrainConfig {
  // One stage per sensitive-attribute domain, trained in this order; must
  // cover the dataset's domains exactly once each.
  std::vector<int> stage_order;
  int epochs_per_stage = 20;
  int batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double finetune_learning_rate = 0.001;  // must stay below learning_rate
  int finetune_batches = 5;
  LossWeights weights;
  MixupConfig mixup;
  int buffer_capacity = 300;
  bool supcon_enabled = true;
  NetworkConfig network;  // input_dim/num_classes filled from the dataset when 0
  std::uint64_t seed = 0;

  void validate() const;
  // stage_order must be a permutation of the dataset's domains (>= 2 of them).
  void validate_against(const Dataset& ds) const;
};

struct StageReport {
  int stage = 0;    // 1-based position in stage_order
  int domain = -1;  // attribute value trained this stage; -1 for pooled runs
  bool has_teacher = false;
  std::uint64_t teacher_checksum_before = 0;
  std::uint64_t teacher_checksum_after = 0;
  std::vector<LossBreakdown> epoch_means;  // one entry per epoch
  std::vector<int> spd_degenerate_steps;   // single-group steps per epoch
  // Test accuracy per domain seen so far, measured after the stage.
  std::map<int, double> domain_accuracy;
};

struct TrainResult {
  Network net;
  std::vector<StageReport> stages;
  // Buffer fingerprint at final-stage start (freeze point) and at run end;
  // equal by protocol. Zero for runs without a buffer phase (vanilla).
  std::uint64_t buffer_checksum_at_freeze = 0;
  std::uint64_t buffer_checksum_at_end = 0;
  std::vector<Sample> buffer_entries;  // final buffer contents

  explicit TrainResult(Network n) : net(std::move(n)) {}
};

struct TrainHooks {
  // Per-epoch record: {stage, epoch, ce, sup, dis, spd, total, accuracy:{domain: acc}}.
  std::function<void(const nlohmann::json&)> on_epoch;
  std::function<void(const std::string&)> on_warning;
};

// SGD with classical momentum: v <- momentum*v + g; p <- p - lr*v.
// Velocities are keyed by position, lazily created at first step.
class SgdOptimizer {
 public:
  SgdOptimizer(double learning_rate, double momentum);

  void step(const std::vector<NodePtr>& params);

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr);

 private:
  double lr_;
  double momentum_;
  std::vector<Tensor> velocity_;
};

// Plain momentum-free update p <- p - lr * grad. Parameters whose gradient
// was never allocated (unreached by the last backward pass) are left alone.
void optimizer_step(const std::vector<NodePtr>& params, double learning_rate);

// Staged domain-incremental run. Per stage: snapshot the student as the
// frozen teacher (stages after the first), then per epoch iterate the
// stage domain's minibatches, each joined with an equal-size replay batch;
// the unmixed union feeds the contrastive, parity, and distillation terms
// while cross-entropy consumes the mixed batch (or the raw current batch
// when mixup is disabled). Each epoch ends with a distillation fine-tuning
// pass over the buffer (stages after the first) followed by a buffer update
// offering that stage's samples on their first appearance. The buffer is
// frozen when the final stage begins.
TrainResult run_incremental(const TrainConfig& cfg, const Dataset& ds,
                            const TrainHooks& hooks = {});

// Baseline: one phase over all domains pooled, cross-entropy only, with the
// same total epoch budget (epochs_per_stage x number of domains), batch
// size, learning rate, and seed discipline.
TrainResult run_vanilla(const TrainConfig& cfg, const Dataset& ds, const TrainHooks& hooks = {});

// Distillation-only fine-tuning: finetune_batches buffer minibatches, each
// minimizing the tempered distillation loss at finetune_learning_rate
// (momentum-free). Only student parameters change. Empty buffer: warns and
// returns 0. Returns the number of steps taken.
int distill_finetune(Network& student, const Network& teacher, const ReplayBuffer& buffer,
                     const TrainConfig& cfg, Rng& rng, const TrainHooks& hooks = {});

// Deterministic forward pass over the given samples (fixed chunking, no rng).
PredictionDump predict(const Network& net, const Dataset& ds,
                       const std::vector<std::size_t>& indices);
double evaluate_accuracy(const Network& net, const Dataset& ds,
                         const std::vector<std::size_t>& indices);

}  // namespace fairdd
