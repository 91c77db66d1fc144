#include "fairdd/model.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

#include "fairdd/checksum.hpp"
#include "fairdd/rng.hpp"

namespace fairdd {

void NetworkConfig::validate() const {
  if (input_dim <= 0) throw std::invalid_argument("network: input_dim must be positive");
  if (num_classes < 2) throw std::invalid_argument("network: num_classes must be >= 2");
  if (projector_dim <= 0) throw std::invalid_argument("network: projector_dim must be positive");
  for (int h : hidden_dims)
    if (h <= 0) throw std::invalid_argument("network: hidden dims must be positive");
}

Network::Network(const NetworkConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  init_parameters();
}

void Network::init_parameters() {
  Rng rng(cfg_.seed);
  auto glorot_layer = [&rng](int fan_in, int fan_out) {
    const double s = std::sqrt(6.0 / (fan_in + fan_out));
    Tensor w({fan_in, fan_out});
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-s, s);
    Layer layer;
    layer.weight = make_param(std::move(w));
    layer.bias = make_param(Tensor({1, fan_out}));
    return layer;
  };

  encoder_.clear();
  int width = cfg_.input_dim;
  for (int h : cfg_.hidden_dims) {
    encoder_.push_back(glorot_layer(width, h));
    width = h;
  }
  classifier_ = glorot_layer(width, cfg_.num_classes);
  projector_hidden_ = glorot_layer(width, cfg_.projector_dim);
  projector_out_ = glorot_layer(cfg_.projector_dim, cfg_.projector_dim);
}

Network Network::clone() const {
  Network copy(cfg_);
  copy.restore(snapshot());
  return copy;
}

Network::Outputs Network::forward(const Tensor& features) const {
  if (features.rank() != 2 || features.cols() != cfg_.input_dim)
    throw std::invalid_argument("network: forward expects [N x " + std::to_string(cfg_.input_dim) +
                                "], got " + features.shape_str());
  NodePtr h = make_const(features);
  for (const Layer& layer : encoder_) h = relu(add(matmul(h, layer.weight), layer.bias));

  Outputs out;
  out.logits = add(matmul(h, classifier_.weight), classifier_.bias);
  out.probs = softmax(out.logits);

  NodePtr p = relu(add(matmul(h, projector_hidden_.weight), projector_hidden_.bias));
  p = add(matmul(p, projector_out_.weight), projector_out_.bias);
  out.embeddings = l2_normalize(p);
  return out;
}

std::vector<const Network::Layer*> Network::layers() const {
  std::vector<const Layer*> out;
  for (const Layer& l : encoder_) out.push_back(&l);
  out.push_back(&classifier_);
  out.push_back(&projector_hidden_);
  out.push_back(&projector_out_);
  return out;
}

std::vector<NodePtr> Network::parameters() const {
  std::vector<NodePtr> out;
  for (const Layer* l : layers()) {
    out.push_back(l->weight);
    out.push_back(l->bias);
  }
  return out;
}

std::vector<NodePtr> Network::encoder_parameters() const {
  std::vector<NodePtr> out;
  for (const Layer& l : encoder_) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

std::vector<NodePtr> Network::classifier_parameters() const {
  return {classifier_.weight, classifier_.bias};
}

std::vector<NodePtr> Network::projector_parameters() const {
  return {projector_hidden_.weight, projector_hidden_.bias, projector_out_.weight,
          projector_out_.bias};
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const NodePtr& p : parameters()) n += p->value.size();
  return n;
}

void Network::zero_grad() {
  for (const NodePtr& p : parameters()) p->zero_grad();
}

NetworkSnapshot Network::snapshot() const {
  NetworkSnapshot snap;
  for (const NodePtr& p : parameters()) snap.values.push_back(p->value);
  return snap;
}

void Network::restore(const NetworkSnapshot& snap) {
  std::vector<NodePtr> params = parameters();
  if (snap.values.size() != params.size())
    throw std::invalid_argument("network: snapshot has " + std::to_string(snap.values.size()) +
                                " tensors, network has " + std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->value.same_shape(snap.values[i]))
      throw std::invalid_argument("network: snapshot shape " + snap.values[i].shape_str() +
                                  " mismatches parameter " + params[i]->value.shape_str());
    params[i]->value = snap.values[i];
  }
}

std::uint64_t Network::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const NodePtr& p : parameters()) h = fnv1a_doubles(p->value.data(), p->value.size(), h);
  return h;
}

std::vector<std::pair<std::string, NodePtr>> Network::named_parameters() const {
  std::vector<std::pair<std::string, NodePtr>> out;
  for (std::size_t i = 0; i < encoder_.size(); ++i) {
    const std::string base = "encoder." + std::to_string(i);
    out.emplace_back(base + ".weight", encoder_[i].weight);
    out.emplace_back(base + ".bias", encoder_[i].bias);
  }
  out.emplace_back("classifier.weight", classifier_.weight);
  out.emplace_back("classifier.bias", classifier_.bias);
  out.emplace_back("projector.0.weight", projector_hidden_.weight);
  out.emplace_back("projector.0.bias", projector_hidden_.bias);
  out.emplace_back("projector.1.weight", projector_out_.weight);
  out.emplace_back("projector.1.bias", projector_out_.bias);
  return out;
}

nlohmann::json Network::to_json() const {
  nlohmann::json j;
  j["format"] = "fairdd.network";
  j["version"] = 1;
  j["config"] = {{"input_dim", cfg_.input_dim},
                 {"hidden_dims", cfg_.hidden_dims},
                 {"num_classes", cfg_.num_classes},
                 {"projector_dim", cfg_.projector_dim},
                 {"seed", cfg_.seed}};
  nlohmann::json params = nlohmann::json::array();
  for (const auto& [name, node] : named_parameters()) {
    nlohmann::json p;
    p["name"] = name;
    p["shape"] = node->value.shape();
    p["values"] = std::vector<double>(node->value.data(), node->value.data() + node->value.size());
    params.push_back(std::move(p));
  }
  j["parameters"] = std::move(params);
  return j;
}

Network Network::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "fairdd.network")
    throw std::invalid_argument("network: unrecognized serialization format");
  if (j.value("version", 0) != 1)
    throw std::invalid_argument("network: unsupported serialization version");
  const nlohmann::json& c = j.at("config");
  NetworkConfig cfg;
  cfg.input_dim = c.at("input_dim").get<int>();
  cfg.hidden_dims = c.at("hidden_dims").get<std::vector<int>>();
  cfg.num_classes = c.at("num_classes").get<int>();
  cfg.projector_dim = c.at("projector_dim").get<int>();
  cfg.seed = c.at("seed").get<std::uint64_t>();

  Network net(cfg);
  const auto named = net.named_parameters();
  const nlohmann::json& params = j.at("parameters");
  if (params.size() != named.size())
    throw std::invalid_argument("network: serialized parameter count mismatch");
  for (std::size_t i = 0; i < named.size(); ++i) {
    const nlohmann::json& p = params[i];
    if (p.at("name").get<std::string>() != named[i].first)
      throw std::invalid_argument("network: parameter order mismatch at " +
                                  p.at("name").get<std::string>());
    Tensor t(p.at("shape").get<std::vector<int>>(), p.at("values").get<std::vector<double>>());
    if (!t.same_shape(named[i].second->value))
      throw std::invalid_argument("network: serialized shape " + t.shape_str() +
                                  " mismatches " + named[i].second->value.shape_str());
    named[i].second->value = std::move(t);
  }
  return net;
}

}  // namespace fairdd
