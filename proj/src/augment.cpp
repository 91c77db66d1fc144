#include "fairdd/augment.hpp"

#include <stdexcept>

namespace fairdd {

void MixupConfig::validate() const {
  if (!(theta > 0.0)) throw std::invalid_argument("mixup: theta must be positive");
}

void mix_pair(const double* xi, int yi, const double* xj, int yj, int feature_dim,
              int num_classes, double lambda, double* x_out, double* y_out) {
  for (int f = 0; f < feature_dim; ++f) x_out[f] = lambda * xi[f] + (1.0 - lambda) * xj[f];
  for (int c = 0; c < num_classes; ++c) y_out[c] = 0.0;
  y_out[yi] += lambda;
  y_out[yj] += 1.0 - lambda;
}

MixedBatch mix(const Batch& current, const Batch& memory, int num_classes, double theta,
               Rng& rng) {
  if (current.empty()) throw std::invalid_argument("mixup: current batch is empty");
  if (!(theta > 0.0)) throw std::invalid_argument("mixup: theta must be positive");
  const int n = current.size();
  const int m = memory.size();
  const int d = current.features.cols();
  if (m > 0 && memory.features.cols() != d)
    throw std::invalid_argument("mixup: memory feature width " +
                                std::to_string(memory.features.cols()) + " != " +
                                std::to_string(d));
  for (int y : current.labels)
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument("mixup: label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(num_classes) + ")");
  for (int y : memory.labels)
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument("mixup: label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(num_classes) + ")");

  MixedBatch out;
  out.features = Tensor({n, d});
  out.soft_labels = Tensor({n, num_classes});
  for (int i = 0; i < n; ++i) {
    const double lambda = rng.beta(theta, theta);
    const int j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n + m)));
    const double* xj;
    int yj;
    if (j < n) {
      xj = current.features.data() + static_cast<std::size_t>(j) * d;
      yj = current.labels[static_cast<std::size_t>(j)];
    } else {
      xj = memory.features.data() + static_cast<std::size_t>(j - n) * d;
      yj = memory.labels[static_cast<std::size_t>(j - n)];
    }
    mix_pair(current.features.data() + static_cast<std::size_t>(i) * d,
             current.labels[static_cast<std::size_t>(i)], xj, yj, d, num_classes, lambda,
             out.features.data() + static_cast<std::size_t>(i) * d,
             out.soft_labels.data() + static_cast<std::size_t>(i) * num_classes);
  }
  return out;
}

}  // namespace fairdd
