#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "fairdd/autodiff.hpp"
#include "fairdd/tensor.hpp"

namespace fairdd {

struct NetworkConfig {
  int input_dim = 0;
  std::vector<int> hidden_dims = {32};
  int num_classes = 0;
  int projector_dim = 32;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const NetworkConfig&) const = default;
};

// Parameter values in canonical parameter order; restore() requires the
// shapes to match the target network's config.
struct NetworkSnapshot {
  std::vector<Tensor> values;
};

// MLP encoder (ReLU hidden layers) with two heads sharing the encoder output:
//   * linear classifier -> logits -> softmax probabilities,
//   * two-layer projector (ReLU between, both layers projector_dim wide at
//     the output side) -> L2-normalized contrastive embedding.
// The heads are parallel: classifier gradients never pass through the
// projector and vice versa.
//
// Initialization: weights uniform in [-s, s] with s = sqrt(6/(fan_in+fan_out))
// per layer, biases zero, drawn in canonical parameter order from the config
// seed. Same config + seed reproduces parameters bitwise.
class Network {
 public:
  explicit Network(const NetworkConfig& cfg);

  Network(Network&&) = default;
  Network& operator=(Network&&) = default;
  Network(const Network&) = delete;  // parameters are shared nodes; use clone()
  Network& operator=(const Network&) = delete;

  Network clone() const;

  const NetworkConfig& config() const { return cfg_; }

  struct Outputs {
    NodePtr logits;      // N x U
    NodePtr probs;       // N x U, rows sum to 1
    NodePtr embeddings;  // N x projector_dim, unit rows
  };

  // Builds a fresh graph over the persistent parameter leaves.
  // features: N x input_dim.
  Outputs forward(const Tensor& features) const;

  // Canonical order: encoder layers (weight, bias), classifier, projector.
  std::vector<NodePtr> parameters() const;
  std::vector<NodePtr> encoder_parameters() const;
  std::vector<NodePtr> classifier_parameters() const;
  std::vector<NodePtr> projector_parameters() const;

  std::size_t parameter_count() const;
  void zero_grad();

  NetworkSnapshot snapshot() const;
  void restore(const NetworkSnapshot& snap);
  std::uint64_t checksum() const;

  // Versioned JSON serialization; doubles survive the round trip bitwise.
  nlohmann::json to_json() const;
  static Network from_json(const nlohmann::json& j);

 private:
  struct Layer {
    NodePtr weight;  // in x out
    NodePtr bias;    // 1 x out
  };

  NetworkConfig cfg_;
  std::vector<Layer> encoder_;
  Layer classifier_;
  Layer projector_hidden_;
  Layer projector_out_;

  Network() = default;
  void init_parameters();
  std::vector<const Layer*> layers() const;
  std::vector<std::pair<std::string, NodePtr>> named_parameters() const;
};

}  // namespace fairdd
