#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairdd/data.hpp"
#include "fairdd/rng.hpp"

namespace fairdd {

// Bounded reservoir over the training stream. After N offers every offered
// sample sits in the buffer with probability capacity/N, uniformly. The
// stream counter persists across epochs and stages. Offers to a frozen
// buffer are a protocol violation and throw; freeze() is idempotent and
// permanent.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int capacity);  // capacity >= 0; 0 disables storage

  // Reservoir step: counts the offer; keeps the sample outright while under
  // capacity, otherwise replaces a uniformly random slot with probability
  // capacity/stream_count. Returns true when the sample was stored.
  bool offer(const Sample& sample, Rng& rng);

  // Uniform sample of min(k, size()) distinct entries.
  std::vector<Sample> sample_batch(int k, Rng& rng) const;

  void freeze();
  bool frozen() const { return frozen_; }

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(entries_.size()); }
  bool empty() const { return entries_.empty(); }
  std::uint64_t stream_count() const { return stream_count_; }
  const std::vector<Sample>& entries() const { return entries_; }

  // Content fingerprint (entries, order-sensitive) for frozen-state checks.
  std::uint64_t checksum() const;

  // Dump in the dataset CSV schema.
  void write_csv(const std::string& path, int feature_dim) const;

 private:
  int capacity_;
  bool frozen_ = false;
  std::uint64_t stream_count_ = 0;
  std::vector<Sample> entries_;
};

}  // namespace fairdd
