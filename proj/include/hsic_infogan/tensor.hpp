#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hsic_infogan/errors.hpp"

namespace hsic_infogan {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>{});
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

/// Dense row-major array of doubles. A rank-0 tensor (empty shape) is a scalar.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

  Tensor(Shape shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_size(shape_)) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_str(shape_));
    }
  }

  static Tensor scalar(double v) { return Tensor(Shape{}, std::vector<double>{v}); }

  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw DimensionError("ragged matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
  }

  static Tensor vector(std::initializer_list<double> values) {
    return Tensor({values.size()}, std::vector<double>(values));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_scalar() const { return shape_.empty(); }

  std::size_t rows() const {
    require_rank(2);
    return shape_[0];
  }
  std::size_t cols() const {
    require_rank(2);
    return shape_[1];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  double item() const {
    if (data_.size() != 1) {
      throw DimensionError("item() on tensor of shape " + shape_str(shape_));
    }
    return data_[0];
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double v) { return std::isfinite(v); });
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  /// Adds `other` elementwise; shapes must match.
  Tensor& operator+=(const Tensor& other) {
    if (other.shape_ != shape_) {
      throw DimensionError("cannot accumulate " + shape_str(other.shape_) +
                           " into " + shape_str(shape_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

  void require_rank(std::size_t r) const {
    if (shape_.size() != r) {
      throw DimensionError("expected rank " + std::to_string(r) + " tensor, got " +
                           shape_str(shape_));
    }
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

inline ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

inline MutMap as_matrix(Tensor& t) {
  return MutMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

}  // namespace detail

/// A·B for rank-2 tensors.
inline Tensor gemm(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
    throw DimensionError("matmul shape mismatch: " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  Tensor out({a.rows(), b.cols()});
  detail::as_matrix(out).noalias() = detail::as_matrix(a) * detail::as_matrix(b);
  return out;
}

/// Aᵀ·B
inline Tensor gemm_tn(const Tensor& a, const Tensor& b) {
  Tensor out({a.cols(), b.cols()});
  detail::as_matrix(out).noalias() =
      detail::as_matrix(a).transpose() * detail::as_matrix(b);
  return out;
}

/// A·Bᵀ
inline Tensor gemm_nt(const Tensor& a, const Tensor& b) {
  Tensor out({a.rows(), b.rows()});
  detail::as_matrix(out).noalias() =
      detail::as_matrix(a) * detail::as_matrix(b).transpose();
  return out;
}

inline Tensor transpose(const Tensor& a) {
  Tensor out({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
  return out;
}

/// Rows `begin..end` of a matrix.
inline Tensor row_slice(const Tensor& a, std::size_t begin, std::size_t end) {
  const std::size_t c = a.cols();
  std::vector<double> data(a.storage().begin() + static_cast<std::ptrdiff_t>(begin * c),
                           a.storage().begin() + static_cast<std::ptrdiff_t>(end * c));
  return Tensor({end - begin, c}, std::move(data));
}

/// Columns `begin..end` of a matrix.
inline Tensor col_slice(const Tensor& a, std::size_t begin, std::size_t end) {
  Tensor out({a.rows(), end - begin});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = begin; j < end; ++j) out.at(i, j - begin) = a.at(i, j);
  return out;
}

/// Gathers the listed rows of a matrix, in order.
inline Tensor gather_rows(const Tensor& a, std::span<const std::size_t> idx) {
  const std::size_t c = a.cols();
  Tensor out({idx.size(), c});
  for (std::size_t r = 0; r < idx.size(); ++r) {
    std::copy_n(a.data().begin() + static_cast<std::ptrdiff_t>(idx[r] * c), c,
                out.data().begin() + static_cast<std::ptrdiff_t>(r * c));
  }
  return out;
}

}  // namespace hsic_infogan
