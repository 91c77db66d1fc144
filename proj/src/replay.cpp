#include "fairdd/replay.hpp"

#include <stdexcept>

#include "fairdd/checksum.hpp"

namespace fairdd {

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
  if (capacity < 0) throw std::invalid_argument("replay: capacity must be >= 0");
  entries_.reserve(static_cast<std::size_t>(capacity));
}

bool ReplayBuffer::offer(const Sample& sample, Rng& rng) {
  if (frozen_) throw std::logic_error("replay: offer to a frozen buffer");
  ++stream_count_;
  if (capacity_ == 0) return false;
  if (size() < capacity_) {
    entries_.push_back(sample);
    return true;
  }
  // Slot j < capacity occurs with probability capacity/stream_count and is
  // uniform over slots: the classic single-draw reservoir step.
  const std::uint64_t j = rng.uniform_int(stream_count_);
  if (j < static_cast<std::uint64_t>(capacity_)) {
    entries_[static_cast<std::size_t>(j)] = sample;
    return true;
  }
  return false;
}

std::vector<Sample> ReplayBuffer::sample_batch(int k, Rng& rng) const {
  if (k < 0) throw std::invalid_argument("replay: sample_batch k must be >= 0");
  const int n = size();
  const int take = k < n ? k : n;
  std::vector<Sample> out;
  if (take == 0) return out;
  // Partial Fisher-Yates over an index view; entries stay untouched.
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  out.reserve(static_cast<std::size_t>(take));
  for (int i = 0; i < take; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    out.push_back(entries_[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
  }
  return out;
}

void ReplayBuffer::freeze() { frozen_ = true; }

std::uint64_t ReplayBuffer::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const Sample& s : entries_) {
    h = fnv1a(&s.id, sizeof(s.id), h);
    h = fnv1a(&s.attr, sizeof(s.attr), h);
    h = fnv1a(&s.label, sizeof(s.label), h);
    h = fnv1a_doubles(s.features.data(), s.features.size(), h);
  }
  return h;
}

void ReplayBuffer::write_csv(const std::string& path, int feature_dim) const {
  write_samples_csv(entries_, feature_dim, path);
}

}  // namespace fairdd
