#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "afca/errors.hpp"

namespace afca {

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatrixXd = Matrix<double>;

template <class Derived>
std::string shape_str(const Eigen::EigenBase<Derived>& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

inline std::string shape_str(std::span<const std::size_t> shape) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ")";
  return os.str();
}

template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

// N-dimensional dense array, row-major. All entries are finite.
template <class Scalar>
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::vector<std::size_t> shape, std::vector<Scalar> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (element_count(shape_) != data_.size()) {
      throw ShapeError("tensor shape " + shape_str(shape_) + " holds " +
                       std::to_string(element_count(shape_)) + " elements but data has " +
                       std::to_string(data_.size()));
    }
    validate();
  }

  static Tensor zeros(std::vector<std::size_t> shape) {
    const auto n = element_count(shape);
    return Tensor(std::move(shape), std::vector<Scalar>(n, Scalar(0)));
  }

  template <class Derived>
  static Tensor from_matrix(const Eigen::MatrixBase<Derived>& m) {
    Tensor t;
    t.shape_ = {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())};
    t.data_.resize(static_cast<std::size_t>(m.size()));
    Eigen::Map<Matrix<Scalar>>(t.data_.data(), m.rows(), m.cols()) = m;
    t.validate();
    return t;
  }

  Matrix<Scalar> to_matrix() const {
    if (shape_.size() > 2) throw ShapeError("to_matrix on rank-" + std::to_string(rank()) + " tensor");
    const auto rows = shape_.empty() ? 1 : static_cast<Eigen::Index>(shape_[0]);
    const auto cols = shape_.size() < 2 ? 1 : static_cast<Eigen::Index>(shape_[1]);
    return Eigen::Map<const Matrix<Scalar>>(data_.data(), rows, cols);
  }

  // Rows of the leading axis flattened over the remaining axes.
  Eigen::Map<const Matrix<Scalar>> flat_view() const {
    const auto rows = shape_.empty() ? 1 : static_cast<Eigen::Index>(shape_[0]);
    const auto cols = rows == 0 ? 0 : static_cast<Eigen::Index>(data_.size()) / rows;
    return {data_.data(), rows, cols};
  }

  void validate() const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) {
        throw DataError("non-finite tensor entry at flat index " + std::to_string(i));
      }
    }
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::span<const Scalar> data() const { return data_; }
  std::span<Scalar> data() { return data_; }

  Scalar& operator()(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
  Scalar operator()(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
  Scalar& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }
  Scalar operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * shape_[1] + j) * shape_[2] + k];
  }

  bool operator==(const Tensor&) const = default;

 private:
  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

  std::vector<std::size_t> shape_{0};
  std::vector<Scalar> data_;
};

}  // namespace afca
