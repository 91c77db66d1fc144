#include "fairdd/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fairdd {

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
  check_shape();
  std::size_t n = 1;
  for (int d : shape_) n *= static_cast<std::size_t>(d);
  values_.assign(n, 0.0);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  check_shape();
  std::size_t n = 1;
  for (int d : shape_) n *= static_cast<std::size_t>(d);
  if (n != values_.size())
    throw std::invalid_argument("tensor: " + shape_str() + " needs " + std::to_string(n) +
                                " values, got " + std::to_string(values_.size()));
}

void Tensor::check_shape() const {
  if (shape_.empty() || shape_.size() > 2)
    throw std::invalid_argument("tensor: rank must be 1 or 2, got shape " + shape_str());
  for (int d : shape_)
    if (d <= 0) throw std::invalid_argument("tensor: nonpositive dimension in " + shape_str());
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double value) {
  Tensor t(std::move(shape));
  t.fill(value);
  return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1}, {value}); }

Tensor Tensor::row(std::vector<double> values) {
  const int n = static_cast<int>(values.size());
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::ones_col(int n) { return full({n, 1}, 1.0); }

int Tensor::rows() const { return rank() == 2 ? shape_[0] : 1; }
int Tensor::cols() const { return rank() == 2 ? shape_[1] : shape_[0]; }

double& Tensor::at(int r, int c) {
  return values_[static_cast<std::size_t>(r) * cols() + c];
}

double Tensor::at(int r, int c) const {
  return values_[static_cast<std::size_t>(r) * cols() + c];
}

double Tensor::item() const {
  if (values_.size() != 1)
    throw std::invalid_argument("tensor: item() on non-scalar shape " + shape_str());
  return values_[0];
}

void Tensor::fill(double value) {
  for (double& v : values_) v = value;
}

bool Tensor::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string Tensor::shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << "]";
  return os.str();
}

std::string Tensor::shape_str() const { return shape_str(shape_); }

}  // namespace fairdd
