#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairdd/rng.hpp"
#include "fairdd/tensor.hpp"

namespace fairdd {

struct Sample {
  std::int64_t id = 0;
  int attr = 0;   // sensitive attribute, binary
  int label = 0;  // class id
  std::vector<double> features;
};

// Synthetic biased-dataset recipe: class means sit on a simplex arrangement
// at pairwise separation `class_separation`; group-1 samples are shifted by a
// fixed random unit direction scaled by `group_shift`; isotropic Gaussian
// noise everywhere. Group sizes follow `group0_fraction` (group 1 is the
// minority when it exceeds 0.5).
struct DatasetSpec {
  int num_classes = 3;
  int feature_dim = 16;
  int samples_per_cell = 400;     // group-0 samples per (class, group) cell
  double group0_fraction = 0.8;   // fraction of each class belonging to group 0
  double class_separation = 3.0;
  double group_shift = 1.5;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  int group1_samples_per_cell() const;
};

struct Dataset {
  int num_classes = 0;
  int feature_dim = 0;
  std::vector<Sample> samples;
  std::vector<std::uint8_t> is_test;  // parallel to samples

  // Ascending distinct attribute values; the stage ordering domain universe.
  std::vector<int> domain_ids() const;
  // attr = -1 selects every domain.
  std::vector<std::size_t> train_indices(int attr = -1) const;
  std::vector<std::size_t> test_indices(int attr = -1) const;

  void validate() const;
};

struct Batch {
  Tensor features;  // n x feature_dim
  std::vector<int> labels;
  std::vector<int> attrs;
  std::vector<std::int64_t> ids;

  int size() const { return static_cast<int>(labels.size()); }
  bool empty() const { return labels.empty(); }
};

// Deterministic per spec.seed; applies the stratified 80/20 split internally.
Dataset generate(const DatasetSpec& spec);

// Reads the dataset CSV schema: header `id,a,y,f0,...,f{d-1}`. Malformed
// input is rejected with the offending line number. The result carries no
// split; call assign_stratified_split before training on it.
Dataset ingest_csv(const std::string& path);

// Marks round(test_fraction * n) samples per (class, group) cell as test
// (at least 1, at most n-1); every cell must end up nonempty in both splits.
void assign_stratified_split(Dataset& ds, double test_fraction, std::uint64_t seed);

// Ordered list of attribute domains (ascending attribute value).
std::vector<int> partition_by_attribute(const Dataset& ds);

// Shuffles `indices` and cuts the result into minibatches of `batch_size`
// (final batch may be short).
std::vector<std::vector<std::size_t>> make_batches(const std::vector<std::size_t>& indices,
                                                   int batch_size, Rng& rng);

Batch gather(const Dataset& ds, const std::vector<std::size_t>& indices);
Batch gather_samples(const std::vector<Sample>& samples, int feature_dim);

// CSV emission in the ingestible schema, full double precision.
void write_samples_csv(const std::vector<Sample>& samples, int feature_dim,
                       const std::string& path);
void write_dataset_csv(const Dataset& ds, const std::string& path);
void write_split_csv(const Dataset& ds, bool test_split, const std::string& path);

}  // namespace fairdd
