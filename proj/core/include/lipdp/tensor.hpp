#ifndef LIPDP_TENSOR_HPP
#define LIPDP_TENSOR_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace lipdp {

/// Dense row-major tensor of doubles. Shapes are immutable after
/// construction; reshaped() returns a view-copy with the same data.
class Tensor {
 public:
  Tensor() = default;

  /// Zero-filled tensor. Every extent must be positive.
  explicit Tensor(std::vector<std::size_t> shape);

  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor from_vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> data);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t axis) const;
  bool empty() const { return data_.empty(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  // Rank-2 access, row-major.
  double at(std::size_t row, std::size_t col) const;
  double& at(std::size_t row, std::size_t col);

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  Tensor reshaped(std::vector<std::size_t> new_shape) const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator-=(const Tensor& other);
  Tensor& operator*=(double scale);

  friend Tensor operator+(Tensor a, const Tensor& b) { return a += b; }
  friend Tensor operator-(Tensor a, const Tensor& b) { return a -= b; }
  friend Tensor operator*(Tensor a, double s) { return a *= s; }
  friend Tensor operator*(double s, Tensor a) { return a *= s; }

  bool all_finite() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

/// Inner product of two same-size tensors, summed left to right.
double dot(const Tensor& a, const Tensor& b);

/// Euclidean norm of the flattened tensor.
double euclidean_norm(const Tensor& t);

}  // namespace lipdp

#endif  // LIPDP_TENSOR_HPP
