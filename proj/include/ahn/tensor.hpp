#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ahn {

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptySupportError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RankError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape &shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

inline std::size_t shape_numel(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

/// Dense row-major tensor of rank 1 or 2. Vectors used by the model are
/// stored as 1 x k rows so that every matmul is an explicit 2-D product.
template <typename Real> class Tensor {
public:
  using value_type = Real;

  Tensor() = default;

  explicit Tensor(Shape shape, Real fill = Real(0))
      : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {
    check_shape();
  }

  Tensor(Shape shape, std::vector<Real> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape();
    if (data_.size() != shape_numel(shape_))
      throw DimensionError("tensor data size " + std::to_string(data_.size()) +
                           " does not match shape " + shape_str(shape_));
  }

  static Tensor matrix(std::size_t rows, std::size_t cols, Real fill = Real(0)) {
    return Tensor({rows, cols}, fill);
  }

  static Tensor
  from_rows(std::initializer_list<std::initializer_list<Real>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<Real> data;
    data.reserve(r * c);
    for (const auto &row : rows) {
      if (row.size() != c)
        throw DimensionError("ragged initializer for matrix");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
  }

  static Tensor row(std::vector<Real> values) {
    const std::size_t n = values.size();
    return Tensor({1, n}, std::move(values));
  }

  static Tensor scalar(Real v) { return Tensor({1, 1}, std::vector<Real>{v}); }

  const Shape &shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t rows() const { return rank() == 2 ? shape_[0] : 1; }
  std::size_t cols() const { return rank() == 2 ? shape_[1] : shape_[0]; }

  Real *data() noexcept { return data_.data(); }
  const Real *data() const noexcept { return data_.data(); }
  std::vector<Real> &values() noexcept { return data_; }
  const std::vector<Real> &values() const noexcept { return data_; }

  Real &operator[](std::size_t i) { return data_[i]; }
  const Real &operator[](std::size_t i) const { return data_[i]; }

  Real &operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  const Real &operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }

  Real item() const {
    if (data_.size() != 1)
      throw RankError("item() on tensor of shape " + shape_str(shape_));
    return data_[0];
  }

  void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  Tensor &operator+=(const Tensor &other) {
    require_same_shape(*this, other, "add-assign");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  friend bool operator==(const Tensor &a, const Tensor &b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

  friend void require_same_shape(const Tensor &a, const Tensor &b,
                                 const char *what) {
    if (a.shape_ != b.shape_)
      throw DimensionError(std::string(what) + ": shape mismatch " +
                           shape_str(a.shape_) + " vs " + shape_str(b.shape_));
  }

private:
  void check_shape() const {
    if (shape_.empty() || shape_.size() > 2)
      throw RankError("tensor rank must be 1 or 2, got " +
                      std::to_string(shape_.size()));
  }

  Shape shape_{1};
  std::vector<Real> data_ = std::vector<Real>(1, Real(0));
};

template <typename Real>
Tensor<Real> transposed(const Tensor<Real> &x) {
  Tensor<Real> out = Tensor<Real>::matrix(x.cols(), x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(c, r) = x(r, c);
  return out;
}

/// C = A * B for 2-D tensors; the naive loop order keeps the inner index
/// contiguous in both B and C.
template <typename Real>
void gemm_accumulate(const Tensor<Real> &a, const Tensor<Real> &b,
                     Tensor<Real> &c) {
  const std::size_t p = a.rows(), q = a.cols(), r = b.cols();
  for (std::size_t i = 0; i < p; ++i) {
    Real *crow = c.data() + i * r;
    for (std::size_t k = 0; k < q; ++k) {
      const Real aik = a.data()[i * q + k];
      if (aik == Real(0)) continue;
      const Real *brow = b.data() + k * r;
      for (std::size_t j = 0; j < r; ++j) crow[j] += aik * brow[j];
    }
  }
}

} // namespace ahn
