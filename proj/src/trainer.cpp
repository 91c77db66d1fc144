#include "fairdd/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fairdd {

void TrainConfig::validate() const {
  if (epochs_per_stage < 1) throw std::invalid_argument("train: epochs_per_stage must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw std::invalid_argument("train: momentum must lie in [0, 1)");
  if (!(finetune_learning_rate > 0.0))
    throw std::invalid_argument("train: finetune_learning_rate must be positive");
  if (!(finetune_learning_rate < learning_rate))
    throw std::invalid_argument("train: finetune_learning_rate must be below learning_rate");
  if (finetune_batches < 0) throw std::invalid_argument("train: finetune_batches must be >= 0");
  if (buffer_capacity < 0) throw std::invalid_argument("train: buffer_capacity must be >= 0");
  weights.validate();
  mixup.validate();
}

void TrainConfig::validate_against(const Dataset& ds) const {
  validate();
  ds.validate();
  const std::vector<int> domains = partition_by_attribute(ds);
  if (domains.size() < 2)
    throw std::invalid_argument("train: dataset has a single domain; nothing to train incrementally");
  std::vector<int> order = stage_order;
  std::sort(order.begin(), order.end());
  if (order != domains)
    throw std::invalid_argument("train: stage_order must cover each dataset domain exactly once");
}

namespace {

NetworkConfig resolved_network(const NetworkConfig& in, const Dataset& ds) {
  NetworkConfig n = in;
  if (n.input_dim == 0) n.input_dim = ds.feature_dim;
  if (n.num_classes == 0) n.num_classes = ds.num_classes;
  if (n.input_dim != ds.feature_dim)
    throw std::invalid_argument("train: network input_dim " + std::to_string(n.input_dim) +
                                " != dataset feature_dim " + std::to_string(ds.feature_dim));
  if (n.num_classes != ds.num_classes)
    throw std::invalid_argument("train: network num_classes " + std::to_string(n.num_classes) +
                                " != dataset num_classes " + std::to_string(ds.num_classes));
  n.validate();
  return n;
}

Batch concat_batches(const Batch& a, const Batch& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  if (a.features.cols() != b.features.cols())
    throw std::invalid_argument("train: cannot join batches of different feature widths");
  Batch out;
  out.features = Tensor({a.size() + b.size(), a.features.cols()});
  std::copy(a.features.data(), a.features.data() + a.features.size(), out.features.data());
  std::copy(b.features.data(), b.features.data() + b.features.size(),
            out.features.data() + a.features.size());
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  out.attrs = a.attrs;
  out.attrs.insert(out.attrs.end(), b.attrs.begin(), b.attrs.end());
  out.ids = a.ids;
  out.ids.insert(out.ids.end(), b.ids.begin(), b.ids.end());
  return out;
}

void check_finite(const LossBreakdown& parts, int stage, int epoch, int step) {
  if (std::isfinite(parts.total)) return;
  std::ostringstream os;
  os << "train: non-finite loss at stage " << stage << " epoch " << epoch << " step " << step
     << " (ce=" << parts.ce << " sup=" << parts.sup << " dis=" << parts.dis
     << " spd=" << parts.spd << ")";
  throw std::runtime_error(os.str());
}

struct StepOutcome {
  LossBreakdown parts;
  bool spd_degenerate = false;
};

// One joint step: contrastive/parity/distillation terms over the unmixed
// current-plus-memory union, cross-entropy over the mixed batch (or the raw
// current batch when mixup is off), one optimizer update on the weighted sum.
StepOutcome incremental_step(Network& net, const Network* teacher, const Batch& current,
                             const Batch& memory, const TrainConfig& cfg, int num_classes,
                             Rng& rng, SgdOptimizer& opt) {
  const Batch joined = concat_batches(current, memory);
  const Network::Outputs out = net.forward(joined.features);

  NodePtr sup;
  if (cfg.supcon_enabled && joined.size() >= 2)
    sup = supcon(out.embeddings, joined.labels, cfg.weights.tau);

  NodePtr spd;
  bool degenerate = false;
  if (cfg.weights.beta > 0.0) {
    SpdLoss s = spd_loss(out.probs, joined.attrs);
    spd = s.value;
    degenerate = s.single_group;
  }

  NodePtr dis;
  if (teacher != nullptr && cfg.weights.alpha > 0.0) {
    const Tensor teacher_probs = teacher->forward(joined.features).probs->value;
    dis = distill(teacher_probs, out.probs, cfg.weights.temperature);
  }

  NodePtr ce;
  if (cfg.mixup.enabled) {
    const MixedBatch mixed = mix(current, memory, num_classes, cfg.mixup.theta, rng);
    ce = cross_entropy(mixed.soft_labels, net.forward(mixed.features).probs);
  } else {
    ce = cross_entropy(one_hot(current.labels, num_classes), net.forward(current.features).probs);
  }

  const CombinedLoss loss = combine(ce, sup, dis, spd, cfg.weights);
  net.zero_grad();
  backward(loss.total);
  opt.step(net.parameters());
  return {loss.parts, degenerate};
}

std::map<int, double> domain_accuracies(const Network& net, const Dataset& ds,
                                        const std::vector<int>& domains) {
  std::map<int, double> out;
  for (int dom : domains) {
    const std::vector<std::size_t> idx = ds.test_indices(dom);
    if (!idx.empty()) out[dom] = evaluate_accuracy(net, ds, idx);
  }
  return out;
}

void emit_epoch(const TrainHooks& hooks, int stage, int epoch, const LossBreakdown& mean,
                const Network& net, const Dataset& ds, const std::vector<int>& seen_domains) {
  if (!hooks.on_epoch) return;
  nlohmann::json acc = nlohmann::json::object();
  for (const auto& [dom, a] : domain_accuracies(net, ds, seen_domains))
    acc[std::to_string(dom)] = a;
  hooks.on_epoch(nlohmann::json{{"stage", stage},
                                {"epoch", epoch},
                                {"ce", mean.ce},
                                {"sup", mean.sup},
                                {"dis", mean.dis},
                                {"spd", mean.spd},
                                {"total", mean.total},
                                {"accuracy", acc}});
}

}  // namespace

SgdOptimizer::SgdOptimizer(double learning_rate, double momentum)
    : lr_(learning_rate), momentum_(momentum) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("sgd: learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw std::invalid_argument("sgd: momentum must lie in [0, 1)");
}

void SgdOptimizer::set_learning_rate(double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("sgd: learning rate must be positive");
  lr_ = lr;
}

void SgdOptimizer::step(const std::vector<NodePtr>& params) {
  if (velocity_.empty()) {
    velocity_.reserve(params.size());
    for (const NodePtr& p : params) velocity_.emplace_back(p->value.shape());
  }
  if (velocity_.size() != params.size())
    throw std::invalid_argument("sgd: parameter count changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Node& p = *params[i];
    Tensor& v = velocity_[i];
    if (!v.same_shape(p.value))
      throw std::invalid_argument("sgd: parameter shape changed between steps");
    const bool has_grad = !p.grad.empty();
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = has_grad ? p.grad[k] : 0.0;
      v[k] = momentum_ * v[k] + g;
      p.value[k] -= lr_ * v[k];
    }
  }
}

void optimizer_step(const std::vector<NodePtr>& params, double learning_rate) {
  if (!(learning_rate >= 0.0))
    throw std::invalid_argument("sgd: learning rate must be >= 0");
  for (const NodePtr& p : params) {
    if (p->grad.empty()) continue;  // unreached by the last backward pass
    for (std::size_t k = 0; k < p->value.size(); ++k)
      p->value[k] -= learning_rate * p->grad[k];
  }
}

int distill_finetune(Network& student, const Network& teacher, const ReplayBuffer& buffer,
                     const TrainConfig& cfg, Rng& rng, const TrainHooks& hooks) {
  if (cfg.finetune_batches <= 0) return 0;
  if (buffer.empty()) {
    if (hooks.on_warning)
      hooks.on_warning("distillation fine-tuning skipped: replay buffer is empty");
    return 0;
  }
  int steps = 0;
  for (int b = 0; b < cfg.finetune_batches; ++b) {
    const Batch mb =
        gather_samples(buffer.sample_batch(cfg.batch_size, rng), student.config().input_dim);
    const Tensor teacher_probs = teacher.forward(mb.features).probs->value;
    const NodePtr dis =
        distill(teacher_probs, student.forward(mb.features).probs, cfg.weights.temperature);
    if (!std::isfinite(dis->value.item()))
      throw std::runtime_error("train: non-finite distillation loss during fine-tuning");
    student.zero_grad();
    backward(dis);
    optimizer_step(student.parameters(), cfg.finetune_learning_rate);
    ++steps;
  }
  return steps;
}

TrainResult run_incremental(const TrainConfig& cfg, const Dataset& ds, const TrainHooks& hooks) {
  cfg.validate_against(ds);
  TrainResult result{Network(resolved_network(cfg.network, ds))};
  Network& net = result.net;
  Rng rng(cfg.seed);
  SgdOptimizer opt(cfg.learning_rate, cfg.momentum);
  ReplayBuffer buffer(cfg.buffer_capacity);
  std::optional<Network> teacher;

  const int num_stages = static_cast<int>(cfg.stage_order.size());
  std::vector<int> seen_domains;
  for (int s = 0; s < num_stages; ++s) {
    const int domain = cfg.stage_order[static_cast<std::size_t>(s)];
    const bool final_stage = s == num_stages - 1;
    seen_domains.push_back(domain);

    StageReport rep;
    rep.stage = s + 1;
    rep.domain = domain;
    if (s > 0) {
      teacher.emplace(net.clone());
      rep.has_teacher = true;
      rep.teacher_checksum_before = teacher->checksum();
    }
    if (final_stage) {
      buffer.freeze();
      result.buffer_checksum_at_freeze = buffer.checksum();
    }

    const std::vector<std::size_t> stage_train = ds.train_indices(domain);
    if (stage_train.empty())
      throw std::invalid_argument("train: domain " + std::to_string(domain) +
                                  " has no training samples");

    for (int epoch = 1; epoch <= cfg.epochs_per_stage; ++epoch) {
      const auto batches = make_batches(stage_train, cfg.batch_size, rng);
      LossBreakdown acc;
      int degenerate = 0;
      std::vector<std::size_t> first_seen;
      for (std::size_t b = 0; b < batches.size(); ++b) {
        const Batch current = gather(ds, batches[b]);
        const Batch memory =
            gather_samples(buffer.sample_batch(current.size(), rng), ds.feature_dim);
        const StepOutcome step = incremental_step(net, teacher ? &*teacher : nullptr, current,
                                                  memory, cfg, ds.num_classes, rng, opt);
        check_finite(step.parts, rep.stage, epoch, static_cast<int>(b) + 1);
        acc.ce += step.parts.ce;
        acc.sup += step.parts.sup;
        acc.dis += step.parts.dis;
        acc.spd += step.parts.spd;
        acc.total += step.parts.total;
        if (step.spd_degenerate) ++degenerate;
        if (epoch == 1)
          first_seen.insert(first_seen.end(), batches[b].begin(), batches[b].end());
      }
      const double inv = 1.0 / static_cast<double>(batches.size());
      const LossBreakdown mean{acc.ce * inv, acc.sup * inv, acc.dis * inv, acc.spd * inv,
                               acc.total * inv};
      rep.epoch_means.push_back(mean);
      rep.spd_degenerate_steps.push_back(degenerate);

      // Protocol epoch end: fine-tune against the frozen teacher, then offer
      // this stage's samples to the reservoir on their first appearance.
      if (teacher) distill_finetune(net, *teacher, buffer, cfg, rng, hooks);
      if (!final_stage && epoch == 1)
        for (std::size_t idx : first_seen) buffer.offer(ds.samples[idx], rng);

      emit_epoch(hooks, rep.stage, epoch, mean, net, ds, seen_domains);
    }

    if (teacher) {
      rep.teacher_checksum_after = teacher->checksum();
      if (rep.teacher_checksum_after != rep.teacher_checksum_before)
        throw std::logic_error("train: teacher parameters changed within a stage");
    }
    rep.domain_accuracy = domain_accuracies(net, ds, seen_domains);
    result.stages.push_back(std::move(rep));
  }

  result.buffer_checksum_at_end = buffer.checksum();
  if (result.buffer_checksum_at_end != result.buffer_checksum_at_freeze)
    throw std::logic_error("train: frozen buffer changed during the final stage");
  result.buffer_entries = buffer.entries();
  return result;
}

TrainResult run_vanilla(const TrainConfig& cfg, const Dataset& ds, const TrainHooks& hooks) {
  cfg.validate_against(ds);
  TrainResult result{Network(resolved_network(cfg.network, ds))};
  Network& net = result.net;
  Rng rng(cfg.seed);
  SgdOptimizer opt(cfg.learning_rate, cfg.momentum);

  const std::vector<std::size_t> all_train = ds.train_indices();
  if (all_train.empty()) throw std::invalid_argument("train: dataset has no training samples");
  const std::vector<int> domains = partition_by_attribute(ds);
  const int total_epochs = cfg.epochs_per_stage * static_cast<int>(cfg.stage_order.size());

  StageReport rep;
  rep.stage = 1;
  rep.domain = -1;  // pooled
  for (int epoch = 1; epoch <= total_epochs; ++epoch) {
    const auto batches = make_batches(all_train, cfg.batch_size, rng);
    double ce_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const Batch current = gather(ds, batches[b]);
      const NodePtr ce =
          cross_entropy(one_hot(current.labels, ds.num_classes), net.forward(current.features).probs);
      LossBreakdown parts;
      parts.ce = ce->value.item();
      parts.total = parts.ce;
      check_finite(parts, 1, epoch, static_cast<int>(b) + 1);
      net.zero_grad();
      backward(ce);
      opt.step(net.parameters());
      ce_sum += parts.ce;
    }
    LossBreakdown mean;
    mean.ce = ce_sum / static_cast<double>(batches.size());
    mean.total = mean.ce;
    rep.epoch_means.push_back(mean);
    rep.spd_degenerate_steps.push_back(0);
    emit_epoch(hooks, 1, epoch, mean, net, ds, domains);
  }
  rep.domain_accuracy = domain_accuracies(net, ds, domains);
  result.stages.push_back(std::move(rep));
  return result;
}

PredictionDump predict(const Network& net, const Dataset& ds,
                       const std::vector<std::size_t>& indices) {
  PredictionDump dump;
  dump.num_classes = ds.num_classes;
  constexpr std::size_t kEvalChunk = 256;  // bounds graph size; rows are independent
  for (std::size_t lo = 0; lo < indices.size(); lo += kEvalChunk) {
    const std::size_t hi = std::min(indices.size(), lo + kEvalChunk);
    const std::vector<std::size_t> chunk(indices.begin() + static_cast<std::ptrdiff_t>(lo),
                                         indices.begin() + static_cast<std::ptrdiff_t>(hi));
    const Batch b = gather(ds, chunk);
    const Network::Outputs out = net.forward(b.features);
    const Tensor& q = out.probs->value;
    for (int i = 0; i < b.size(); ++i) {
      PredictionRow row;
      row.id = b.ids[static_cast<std::size_t>(i)];
      row.label = b.labels[static_cast<std::size_t>(i)];
      row.attr = b.attrs[static_cast<std::size_t>(i)];
      row.probs.resize(static_cast<std::size_t>(ds.num_classes));
      int best = 0;
      for (int c = 0; c < ds.num_classes; ++c) {
        row.probs[static_cast<std::size_t>(c)] = q.at(i, c);
        if (q.at(i, c) > q.at(i, best)) best = c;
      }
      row.predicted = best;
      dump.rows.push_back(std::move(row));
    }
  }
  return dump;
}

double evaluate_accuracy(const Network& net, const Dataset& ds,
                         const std::vector<std::size_t>& indices) {
  if (indices.empty())
    throw std::invalid_argument("train: cannot evaluate over an empty index set");
  const PredictionDump dump = predict(net, ds, indices);
  std::size_t correct = 0;
  for (const PredictionRow& r : dump.rows)
    if (r.predicted == r.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(dump.rows.size());
}

}  // namespace fairdd
