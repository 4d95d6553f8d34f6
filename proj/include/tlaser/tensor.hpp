#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "tlaser/errors.hpp"

namespace tlaser {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMajorMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// A tube is the length-p fiber A(i,j,:); it plays the role of a scalar in the
// c-product algebra.
template <typename Scalar>
using Tube = Vector<Scalar>;

namespace detail {

// Sum of squares accumulated in ascending order of magnitude. The result only
// depends on the multiset of values, so any permutation of the entries yields
// the same bits.
template <typename Scalar>
Scalar permutation_invariant_norm(std::span<const Scalar> values) {
  std::vector<Scalar> squares(values.size());
  std::transform(values.begin(), values.end(), squares.begin(),
                 [](Scalar v) { return v * v; });
  std::sort(squares.begin(), squares.end());
  Scalar sum(0);
  for (Scalar s : squares) sum += s;
  return std::sqrt(sum);
}

inline void check_mode(int mode) {
  if (mode < 1 || mode > 3)
    throw DomainError("mode must be 1, 2 or 3, got " + std::to_string(mode));
}

}  // namespace detail

/// Dense real third-order tensor of shape m x n x p.
///
/// Entries are stored frontal-slice-major and row-major within each slice:
/// entry (i,j,k) (0-based) lives at offset (k*m + i)*n + j. Frontal slices are
/// therefore contiguous row-major m x n blocks and can be mapped as Eigen
/// matrices without copying.
template <typename Scalar>
class Tensor3 {
 public:
  using SliceMap = Eigen::Map<RowMajorMatrix<Scalar>>;
  using ConstSliceMap = Eigen::Map<const RowMajorMatrix<Scalar>>;

  Tensor3() = default;

  Tensor3(Index m, Index n, Index p) : m_(m), n_(n), p_(p) {
    if (m <= 0 || n <= 0 || p <= 0)
      throw DomainError("tensor extents must be positive");
    data_.assign(static_cast<std::size_t>(m * n * p), Scalar(0));
  }

  static Tensor3 Zero(Index m, Index n, Index p) { return Tensor3(m, n, p); }

  // Takes ownership of `data` laid out in canonical storage order. Rejects
  // non-finite values.
  static Tensor3 FromData(Index m, Index n, Index p, std::vector<Scalar> data) {
    Tensor3 t(m, n, p);
    if (data.size() != t.data_.size())
      throw DomainError("data length does not match tensor extents");
    for (Scalar v : data)
      if (!std::isfinite(v)) throw DomainError("tensor entries must be finite");
    t.data_ = std::move(data);
    return t;
  }

  // Stacks p equally sized m x n matrices as frontal slices.
  template <typename Derived>
  static Tensor3 FromSlices(const std::vector<Derived>& slices) {
    if (slices.empty()) throw DomainError("need at least one frontal slice");
    Tensor3 t(slices.front().rows(), slices.front().cols(),
              static_cast<Index>(slices.size()));
    for (Index k = 0; k < t.p_; ++k) {
      const auto& s = slices[static_cast<std::size_t>(k)];
      if (s.rows() != t.m_ || s.cols() != t.n_)
        throw DomainError("frontal slices must share one shape");
      t.slice(k) = s;
    }
    return t;
  }

  template <typename Rng>
  static Tensor3 Random(Index m, Index n, Index p, Rng& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Tensor3 t(m, n, p);
    for (auto& v : t.data_) v = static_cast<Scalar>(dist(rng));
    return t;
  }

  Index rows() const { return m_; }
  Index cols() const { return n_; }
  Index depth() const { return p_; }
  Index size() const { return m_ * n_ * p_; }

  bool same_shape(const Tensor3& o) const {
    return m_ == o.m_ && n_ == o.n_ && p_ == o.p_;
  }

  Scalar& operator()(Index i, Index j, Index k) {
    return data_[static_cast<std::size_t>((k * m_ + i) * n_ + j)];
  }
  Scalar operator()(Index i, Index j, Index k) const {
    return data_[static_cast<std::size_t>((k * m_ + i) * n_ + j)];
  }

  SliceMap slice(Index k) { return SliceMap(data_.data() + k * m_ * n_, m_, n_); }
  ConstSliceMap slice(Index k) const {
    return ConstSliceMap(data_.data() + k * m_ * n_, m_, n_);
  }

  Tube<Scalar> tube(Index i, Index j) const {
    Tube<Scalar> t(p_);
    for (Index k = 0; k < p_; ++k) t(k) = (*this)(i, j, k);
    return t;
  }

  void set_tube(Index i, Index j, const Tube<Scalar>& t) {
    if (t.size() != p_) throw DomainError("tube length mismatch");
    for (Index k = 0; k < p_; ++k) (*this)(i, j, k) = t(k);
  }

  std::span<Scalar> data() { return data_; }
  std::span<const Scalar> data() const { return data_; }

  // Whole tensor viewed as a p x (m*n) row-major matrix: row k is frontal
  // slice k flattened row by row. Mode-3 operators act on this view.
  Eigen::Map<RowMajorMatrix<Scalar>> slice_rows() {
    return {data_.data(), p_, m_ * n_};
  }
  Eigen::Map<const RowMajorMatrix<Scalar>> slice_rows() const {
    return {data_.data(), p_, m_ * n_};
  }

  Tensor3& operator+=(const Tensor3& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Tensor3& operator-=(const Tensor3& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Tensor3& operator*=(Scalar s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
  friend Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
  friend Tensor3 operator*(Scalar s, Tensor3 a) { return a *= s; }
  friend Tensor3 operator*(Tensor3 a, Scalar s) { return a *= s; }

  bool operator==(const Tensor3& o) const = default;

  template <typename Other>
  Tensor3<Other> cast() const {
    Tensor3<Other> t(m_, n_, p_);
    std::transform(data_.begin(), data_.end(), t.data().begin(),
                   [](Scalar v) { return static_cast<Other>(v); });
    return t;
  }

 private:
  void check_same(const Tensor3& o) const {
    if (!same_shape(o)) throw DomainError("tensor shape mismatch");
  }

  Index m_ = 0;
  Index n_ = 0;
  Index p_ = 0;
  std::vector<Scalar> data_;
};

using Tensor3d = Tensor3<double>;

/// Lateral slice A(:,j,:): an m x 1 x p tensor, stored as an m x p matrix
/// whose column k is the k-th frontal entry. These are the "vectors" of the
/// c-product algebra.
template <typename Scalar>
class LateralSlice {
 public:
  LateralSlice() = default;
  explicit LateralSlice(Matrix<Scalar> values) : values_(std::move(values)) {}
  LateralSlice(Index m, Index p) : values_(Matrix<Scalar>::Zero(m, p)) {}

  static LateralSlice FromTensor(const Tensor3<Scalar>& t) {
    if (t.cols() != 1) throw DomainError("lateral slice needs mode-2 extent 1");
    return LateralSlice(lateral_of(t, 0));
  }

  static Matrix<Scalar> lateral_of(const Tensor3<Scalar>& t, Index j) {
    Matrix<Scalar> v(t.rows(), t.depth());
    for (Index k = 0; k < t.depth(); ++k) v.col(k) = t.slice(k).col(j);
    return v;
  }

  Tensor3<Scalar> to_tensor() const {
    Tensor3<Scalar> t(values_.rows(), 1, values_.cols());
    for (Index k = 0; k < values_.cols(); ++k) t.slice(k).col(0) = values_.col(k);
    return t;
  }

  Index rows() const { return values_.rows(); }
  Index depth() const { return values_.cols(); }
  const Matrix<Scalar>& values() const { return values_; }
  Matrix<Scalar>& values() { return values_; }

 private:
  Matrix<Scalar> values_;
};

/// Frobenius norm. Squares are summed in ascending order, so the result is
/// bitwise invariant under any permutation of the entries.
template <typename Scalar>
Scalar frobenius_norm(const Tensor3<Scalar>& a) {
  return detail::permutation_invariant_norm<Scalar>(a.data());
}

template <typename Derived>
typename Derived::Scalar frobenius_norm(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  const Matrix<Scalar> m = x;
  return detail::permutation_invariant_norm<Scalar>(
      std::span<const Scalar>(m.data(), static_cast<std::size_t>(m.size())));
}

/// Mode-n unfolding A_(n). The row index is the chosen mode's index; the two
/// remaining indices enumerate the columns with the lower-numbered mode
/// varying fastest:
///   mode 1: column j + n*k
///   mode 2: column i + m*k
///   mode 3: column i + m*j
template <typename Scalar>
Matrix<Scalar> unfold_mode(const Tensor3<Scalar>& a, int mode) {
  detail::check_mode(mode);
  const Index m = a.rows(), n = a.cols(), p = a.depth();
  Matrix<Scalar> out;
  switch (mode) {
    case 1:
      out.resize(m, n * p);
      for (Index k = 0; k < p; ++k)
        for (Index j = 0; j < n; ++j)
          for (Index i = 0; i < m; ++i) out(i, j + n * k) = a(i, j, k);
      break;
    case 2:
      out.resize(n, m * p);
      for (Index k = 0; k < p; ++k)
        for (Index j = 0; j < n; ++j)
          for (Index i = 0; i < m; ++i) out(j, i + m * k) = a(i, j, k);
      break;
    default:
      out.resize(p, m * n);
      for (Index k = 0; k < p; ++k)
        for (Index j = 0; j < n; ++j)
          for (Index i = 0; i < m; ++i) out(k, i + m * j) = a(i, j, k);
  }
  return out;
}

/// Inverse of unfold_mode for a tensor of extents (m, n, p).
template <typename Derived>
Tensor3<typename Derived::Scalar> fold_mode(const Eigen::MatrixBase<Derived>& x,
                                            int mode, Index m, Index n, Index p) {
  detail::check_mode(mode);
  const Index rows = mode == 1 ? m : mode == 2 ? n : p;
  if (x.rows() != rows || x.cols() * rows != m * n * p)
    throw DomainError("unfolded matrix does not match target extents");
  Tensor3<typename Derived::Scalar> a(m, n, p);
  for (Index k = 0; k < p; ++k)
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < m; ++i) {
        switch (mode) {
          case 1: a(i, j, k) = x(i, j + n * k); break;
          case 2: a(i, j, k) = x(j, i + m * k); break;
          default: a(i, j, k) = x(k, i + m * j);
        }
      }
  return a;
}

/// n-mode product A x_n X, defined through B_(n) = X * A_(n). X must be
/// J x I_n; the result has extent J along `mode`.
template <typename Scalar, typename Derived>
Tensor3<Scalar> mode_n_product(const Tensor3<Scalar>& a,
                               const Eigen::MatrixBase<Derived>& x, int mode) {
  detail::check_mode(mode);
  const Index extent = mode == 1 ? a.rows() : mode == 2 ? a.cols() : a.depth();
  if (x.cols() != extent)
    throw DomainError("mode_n_product: matrix has " + std::to_string(x.cols()) +
                      " columns, mode " + std::to_string(mode) + " extent is " +
                      std::to_string(extent));
  const Matrix<Scalar> b = x * unfold_mode(a, mode);
  const Index j = x.rows();
  return fold_mode(b, mode, mode == 1 ? j : a.rows(), mode == 2 ? j : a.cols(),
                   mode == 3 ? j : a.depth());
}

/// Contraction with a vector along `mode`; the singleton mode is dropped and
/// the two remaining modes keep their relative order (e.g. mode 3 gives m x n).
template <typename Scalar, typename Derived>
Matrix<Scalar> contract_mode_vector(const Tensor3<Scalar>& a,
                                    const Eigen::MatrixBase<Derived>& v,
                                    int mode) {
  detail::check_mode(mode);
  if (v.cols() != 1 && v.rows() != 1)
    throw DomainError("contract_mode_vector expects a vector");
  const Tensor3<Scalar> b =
      mode_n_product(a, v.reshaped(1, v.size()).eval(), mode);
  const Index rows = mode == 1 ? b.cols() : b.rows();
  const Index cols = mode == 3 ? b.cols() : b.depth();
  Matrix<Scalar> out(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c)
      out(r, c) = mode == 1 ? b(0, r, c) : mode == 2 ? b(r, 0, c) : b(r, c, 0);
  return out;
}

}  // namespace tlaser
