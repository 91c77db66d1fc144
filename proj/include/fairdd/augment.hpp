#pragma once

#include "fairdd/data.hpp"
#include "fairdd/rng.hpp"
#include "fairdd/tensor.hpp"

namespace fairdd {

struct MixupConfig {
  bool enabled = true;
  double theta = 0.8;  // Beta(theta, theta) shape

  void validate() const;  // theta > 0
};

struct MixedBatch {
  Tensor features;     // |XB| x d
  Tensor soft_labels;  // |XB| x U, convex label mixtures, rows sum to 1
};

// One convex combination: lambda * (xi, onehot yi) + (1 - lambda) * (xj, onehot yj).
// Exposed so endpoint (lambda = 1) and midpoint cases are directly checkable.
void mix_pair(const double* xi, int yi, const double* xj, int yj, int feature_dim,
              int num_classes, double lambda, double* x_out, double* y_out);

// For each current-batch sample i: draw lambda ~ Beta(theta, theta), then a
// partner j uniformly from current + memory (memory empty -> current only;
// j may equal i). Output has exactly |current| rows. Draw order is pinned:
// (lambda, j) per sample, ascending i.
MixedBatch mix(const Batch& current, const Batch& memory, int num_classes, double theta,
               Rng& rng);

}  // namespace fairdd
