#pragma once

#include <cmath>

#include "tlaser/parallel.hpp"
#include "tlaser/transform.hpp"

namespace tlaser {

/// Slice-by-slice matrix product of two transform-domain tensors:
/// C_i = A_i * B_i for every frontal index i.
template <typename Scalar>
Tensor3<Scalar> facewise_product(const Tensor3<Scalar>& a_hat,
                                 const Tensor3<Scalar>& b_hat) {
  if (a_hat.cols() != b_hat.rows())
    throw DomainError("facewise_product: inner dimensions differ (" +
                      std::to_string(a_hat.cols()) + " vs " +
                      std::to_string(b_hat.rows()) + ")");
  if (a_hat.depth() != b_hat.depth())
    throw DomainError("facewise_product: depth mismatch");
  Tensor3<Scalar> c(a_hat.rows(), b_hat.cols(), a_hat.depth());
  parallel_for(a_hat.depth(), [&](Index k) {
    c.slice(k).noalias() = a_hat.slice(k) * b_hat.slice(k);
  });
  return c;
}

/// Transposes every frontal slice.
template <typename Scalar>
Tensor3<Scalar> facewise_transpose(const Tensor3<Scalar>& a) {
  Tensor3<Scalar> b(a.cols(), a.rows(), a.depth());
  for (Index k = 0; k < a.depth(); ++k) b.slice(k) = a.slice(k).transpose();
  return b;
}

/// C = A *_c B = L^-1( L(A) facewise L(B) ).
template <typename Scalar>
Tensor3<Scalar> c_product(const Tensor3<Scalar>& a, const Tensor3<Scalar>& b,
                          const TransformSpec<Scalar>& t) {
  if (a.cols() != b.rows() || a.depth() != b.depth())
    throw DomainError("c_product: shapes " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + "x" + std::to_string(a.depth()) +
                      " and " + std::to_string(b.rows()) + "x" +
                      std::to_string(b.cols()) + "x" + std::to_string(b.depth()) +
                      " are not conformant");
  return l_inverse(facewise_product(l_transform(a, t), l_transform(b, t)), t);
}

/// c-transpose: the transform-domain slices of the result are the transposed
/// slices of L(A). A mode-3 transform mixes whole slices and commutes with
/// transposing each of them, so this is the facewise transpose for any Z.
template <typename Scalar>
Tensor3<Scalar> c_transpose(const Tensor3<Scalar>& a,
                            const TransformSpec<Scalar>& t) {
  t.check(a);
  return facewise_transpose(a);
}

/// The identity tube e = L^-1(1).
template <typename Scalar>
Tube<Scalar> identity_tube(const TransformSpec<Scalar>& t) {
  return l_inverse(Tube<Scalar>(Tube<Scalar>::Ones(t.size())), t);
}

template <typename Scalar>
struct IdentityTensor {
  Index m = 0;
  Index p = 0;
  Tensor3<Scalar> realized;
};

template <typename Scalar>
IdentityTensor<Scalar> c_identity(Index m, const TransformSpec<Scalar>& t) {
  if (m <= 0) throw DomainError("identity size must be positive");
  const Tube<Scalar> e = identity_tube(t);
  IdentityTensor<Scalar> id{m, t.size(), Tensor3<Scalar>(m, m, t.size())};
  for (Index i = 0; i < m; ++i) id.realized.set_tube(i, i, e);
  return id;
}

namespace detail {

// Squared Frobenius deviation of the transform-domain Gram slices Q_i^T Q_i
// from the identity, summed over all slices.
template <typename Scalar>
Scalar gram_deviation_sq(const Tensor3<Scalar>& q_hat, bool left) {
  Scalar total(0);
  for (Index k = 0; k < q_hat.depth(); ++k) {
    const auto s = q_hat.slice(k);
    const Matrix<Scalar> g =
        left ? Matrix<Scalar>(s.transpose() * s) : Matrix<Scalar>(s * s.transpose());
    total += (g - Matrix<Scalar>::Identity(g.rows(), g.cols())).squaredNorm();
  }
  return total;
}

}  // namespace detail

/// True when Q^T *_c Q = Q *_c Q^T = I to within tol, measured as
/// ||Q^T *_c Q - I||_F <= tol * sqrt(m p) in the transform domain.
template <typename Scalar>
bool is_f_orthogonal(const Tensor3<Scalar>& q, const TransformSpec<Scalar>& t,
                     Scalar tol) {
  if (q.rows() != q.cols())
    throw DomainError("is_f_orthogonal: tensor is not square in modes 1-2");
  const Tensor3<Scalar> q_hat = l_transform(q, t);
  const Scalar bound = tol * std::sqrt(Scalar(q.rows() * q.depth()));
  return std::sqrt(detail::gram_deviation_sq(q_hat, true)) <= bound &&
         std::sqrt(detail::gram_deviation_sq(q_hat, false)) <= bound;
}

/// Column-orthonormality for tall m x k x p tensors (k <= m): the lateral
/// slices are f-orthonormal, ||Q^T *_c Q - I_k||_F <= tol * sqrt(k p).
template <typename Scalar>
bool has_f_orthonormal_columns(const Tensor3<Scalar>& q,
                               const TransformSpec<Scalar>& t, Scalar tol) {
  const Tensor3<Scalar> q_hat = l_transform(q, t);
  const Scalar bound = tol * std::sqrt(Scalar(q.cols() * q.depth()));
  return std::sqrt(detail::gram_deviation_sq(q_hat, true)) <= bound;
}

/// Largest off-diagonal magnitude of the transform-domain Gram slices.
template <typename Scalar>
Scalar max_gram_off_diagonal(const Tensor3<Scalar>& q,
                             const TransformSpec<Scalar>& t) {
  const Tensor3<Scalar> q_hat = l_transform(q, t);
  Scalar worst(0);
  for (Index k = 0; k < q_hat.depth(); ++k) {
    Matrix<Scalar> g = q_hat.slice(k).transpose() * q_hat.slice(k);
    g.diagonal().setZero();
    if (g.size() > 0) worst = std::max(worst, g.cwiseAbs().maxCoeff());
  }
  return worst;
}

/// Every off-diagonal entry of every frontal slice is at most tol * ||S||_F.
template <typename Scalar>
bool is_f_diagonal(const Tensor3<Scalar>& s, Scalar tol) {
  const Scalar bound = tol * frobenius_norm(s);
  for (Index k = 0; k < s.depth(); ++k)
    for (Index i = 0; i < s.rows(); ++i)
      for (Index j = 0; j < s.cols(); ++j)
        if (i != j && std::abs(s(i, j, k)) > bound) return false;
  return true;
}

/// f-diagonality checked on L(S), where the c-SVD constructs it.
template <typename Scalar>
bool is_f_diagonal_transformed(const Tensor3<Scalar>& s,
                               const TransformSpec<Scalar>& t, Scalar tol) {
  const Tensor3<Scalar> s_hat = l_transform(s, t);
  const Scalar bound = tol * frobenius_norm(s_hat);
  for (Index k = 0; k < s_hat.depth(); ++k)
    for (Index i = 0; i < s_hat.rows(); ++i)
      for (Index j = 0; j < s_hat.cols(); ++j)
        if (i != j && std::abs(s_hat(i, j, k)) > bound) return false;
  return true;
}

// Lateral-slice and tube helpers used by the Krylov code.

/// A *_c x for an m x n x p tensor and an n x 1 x p lateral slice.
template <typename Scalar>
LateralSlice<Scalar> c_apply(const Tensor3<Scalar>& a,
                             const LateralSlice<Scalar>& x,
                             const TransformSpec<Scalar>& t) {
  return LateralSlice<Scalar>::FromTensor(c_product(a, x.to_tensor(), t));
}

/// x *_c s for a lateral slice x and a tube s.
template <typename Scalar>
LateralSlice<Scalar> c_scale(const LateralSlice<Scalar>& x, const Tube<Scalar>& s,
                             const TransformSpec<Scalar>& t) {
  LateralSlice<Scalar> x_hat = l_transform(x, t);
  const Tube<Scalar> s_hat = l_transform(s, t);
  x_hat.values() = x_hat.values() * s_hat.asDiagonal();
  return l_inverse(x_hat, t);
}

}  // namespace tlaser
