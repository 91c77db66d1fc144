#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace fairdd {

// Dense row-major double tensor, rank 1 or 2. Desk-scale: storage is a
// plain std::vector<double>, no views, no striding.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape);  // zero-filled
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor zeros(std::vector<int> shape);
  static Tensor full(std::vector<int> shape, double value);
  static Tensor scalar(double value);                    // shape {1}
  static Tensor row(std::vector<double> values);         // shape {1, n}
  static Tensor ones_col(int n);                         // shape {n, 1}

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  // Row/column view of the shape: rank-1 tensors count as a single row.
  int rows() const;
  int cols() const;

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(int r, int c);
  double at(int r, int c) const;

  // Value of a single-element tensor; throws otherwise.
  double item() const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  void fill(double value);
  void zero() { fill(0.0); }

  bool all_finite() const;

  std::string shape_str() const;
  static std::string shape_str(const std::vector<int>& shape);

 private:
  std::vector<int> shape_;
  std::vector<double> values_;

  void check_shape() const;
};

}  // namespace fairdd
