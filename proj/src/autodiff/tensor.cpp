#include "spd/autodiff/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "spd/errors.hpp"

namespace spd::ad {

namespace {

std::size_t shape_product(const Shape& shape) {
  require(!shape.empty(), "tensor shape must have at least one dimension");
  std::size_t n = 1;
  for (std::size_t d : shape) {
    require(d > 0, "tensor dimensions must be positive");
    n *= d;
  }
  return n;
}

}  // namespace

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  require(shape_product(shape_) == data_.size(),
          "tensor values do not match shape " + shape_string(shape_));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({1, n}, std::move(values));
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, std::vector<double>{value}); }

std::size_t Tensor::rows() const {
  if (shape_.size() == 1) return 1;
  require(shape_.size() == 2, "matrix view requires rank 1 or 2");
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (shape_.size() == 1) return shape_[0];
  require(shape_.size() == 2, "matrix view requires rank 1 or 2");
  return shape_[1];
}

double Tensor::item() const {
  require(data_.size() == 1, "item() requires a single-element tensor");
  return data_[0];
}

bool Tensor::same_shape(const Tensor& other) const {
  if (shape_ == other.shape_) return true;
  // Rank-1 n and 1 x n describe the same row.
  return numel() == other.numel() && rank() <= 2 && other.rank() <= 2 &&
         rows() == other.rows() && cols() == other.cols();
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor& Tensor::operator+=(const Tensor& other) {
  require(same_shape(other), "shape mismatch in +=: " + shape_string(shape_) + " vs " +
                                 shape_string(other.shape_));
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

}  // namespace spd::ad
