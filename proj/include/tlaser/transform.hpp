#pragma once

#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <optional>

#include "tlaser/tensor.hpp"

namespace tlaser {

enum class TransformKind { DctOrthonormal, ExplicitMatrix };

/// Orthonormal DCT-II matrix of size p: C(k, j) = s_k cos(pi (2j+1) k / 2p)
/// with s_0 = sqrt(1/p) and s_k = sqrt(2/p) otherwise. C is orthogonal.
template <typename Scalar>
Matrix<Scalar> dct_matrix(Index p) {
  if (p <= 0) throw DomainError("DCT size must be positive");
  Matrix<Scalar> c(p, p);
  const Scalar pi = std::numbers::pi_v<Scalar>;
  const Scalar s0 = std::sqrt(Scalar(1) / Scalar(p));
  const Scalar sk = std::sqrt(Scalar(2) / Scalar(p));
  for (Index k = 0; k < p; ++k)
    for (Index j = 0; j < p; ++j)
      c(k, j) = (k == 0 ? s0 : sk) *
                std::cos(pi * Scalar(2 * j + 1) * Scalar(k) / Scalar(2 * p));
  return c;
}

/// The invertible mode-3 transform that defines the product. Holds Z and its
/// inverse; for the orthonormal DCT the inverse is the transpose.
template <typename Scalar>
class TransformSpec {
 public:
  static TransformSpec Dct(Index p) {
    TransformSpec t;
    t.kind_ = TransformKind::DctOrthonormal;
    t.z_ = dct_matrix<Scalar>(p);
    t.z_inv_ = t.z_.transpose();
    return t;
  }

  // Rejects non-square or numerically singular Z.
  static TransformSpec Explicit(const Matrix<Scalar>& z) {
    if (z.rows() != z.cols() || z.rows() == 0)
      throw DomainError("transform matrix must be square and non-empty");
    if (!z.allFinite()) throw DomainError("transform matrix must be finite");
    Eigen::FullPivLU<Matrix<Scalar>> lu(z);
    if (!lu.isInvertible())
      throw DomainError("transform matrix is singular");
    TransformSpec t;
    t.kind_ = TransformKind::ExplicitMatrix;
    t.z_ = z;
    t.z_inv_ = lu.inverse();
    if (!t.z_inv_.allFinite())
      throw DomainError("transform matrix is numerically singular");
    return t;
  }

  TransformKind kind() const { return kind_; }
  Index size() const { return z_.rows(); }
  const Matrix<Scalar>& matrix() const { return z_; }
  const Matrix<Scalar>& inverse_matrix() const { return z_inv_; }
  bool is_orthogonal() const { return kind_ == TransformKind::DctOrthonormal; }

  void check(const Tensor3<Scalar>& a) const {
    if (a.depth() != size())
      throw DomainError("transform size " + std::to_string(size()) +
                        " does not match tensor depth " +
                        std::to_string(a.depth()));
  }

 private:
  TransformSpec() = default;
  TransformKind kind_ = TransformKind::DctOrthonormal;
  Matrix<Scalar> z_;
  Matrix<Scalar> z_inv_;
};

namespace detail {

// Left-multiplies the p x (m*n) slice view by `z`: equivalent to A x_3 z.
template <typename Scalar>
Tensor3<Scalar> apply_mode3(const Tensor3<Scalar>& a, const Matrix<Scalar>& z) {
  Tensor3<Scalar> out(a.rows(), a.cols(), z.rows());
  out.slice_rows().noalias() = z * a.slice_rows();
  return out;
}

}  // namespace detail

template <typename Scalar>
Tensor3<Scalar> l_transform(const Tensor3<Scalar>& a,
                            const TransformSpec<Scalar>& t) {
  t.check(a);
  return detail::apply_mode3(a, t.matrix());
}

template <typename Scalar>
Tensor3<Scalar> l_inverse(const Tensor3<Scalar>& a,
                          const TransformSpec<Scalar>& t) {
  t.check(a);
  return detail::apply_mode3(a, t.inverse_matrix());
}

template <typename Scalar>
Tensor3<Scalar> dct_mode3(const Tensor3<Scalar>& a) {
  return l_transform(a, TransformSpec<Scalar>::Dct(a.depth()));
}

template <typename Scalar>
Tensor3<Scalar> idct_mode3(const Tensor3<Scalar>& a) {
  return l_inverse(a, TransformSpec<Scalar>::Dct(a.depth()));
}

// Tube-level transforms (a tube is a 1 x 1 x p tensor).
template <typename Scalar>
Tube<Scalar> l_transform(const Tube<Scalar>& x, const TransformSpec<Scalar>& t) {
  if (x.size() != t.size()) throw DomainError("tube length mismatch");
  return t.matrix() * x;
}

template <typename Scalar>
Tube<Scalar> l_inverse(const Tube<Scalar>& x, const TransformSpec<Scalar>& t) {
  if (x.size() != t.size()) throw DomainError("tube length mismatch");
  return t.inverse_matrix() * x;
}

// Lateral slices store frontal index along columns, so the transform acts
// from the right.
template <typename Scalar>
LateralSlice<Scalar> l_transform(const LateralSlice<Scalar>& x,
                                 const TransformSpec<Scalar>& t) {
  if (x.depth() != t.size()) throw DomainError("lateral slice depth mismatch");
  return LateralSlice<Scalar>(x.values() * t.matrix().transpose());
}

template <typename Scalar>
LateralSlice<Scalar> l_inverse(const LateralSlice<Scalar>& x,
                               const TransformSpec<Scalar>& t) {
  if (x.depth() != t.size()) throw DomainError("lateral slice depth mismatch");
  return LateralSlice<Scalar>(x.values() * t.inverse_matrix().transpose());
}

}  // namespace tlaser
