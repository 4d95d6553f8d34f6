#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <vector>

#include "tlaser/c_algebra.hpp"

namespace tlaser {

/// A = U *_c S *_c V^T with q = min(m, n) singular tubes.
template <typename Scalar>
struct CSvdFactors {
  Tensor3<Scalar> u;  // m x q x p
  Tensor3<Scalar> s;  // q x q x p, f-diagonal in the transform domain
  Tensor3<Scalar> v;  // n x q x p
  // Transform-domain singular values: column k holds the (non-negative)
  // singular values of frontal slice k of L(A), row i belongs to tube i.
  Matrix<Scalar> sigma;
  // Euclidean norms of the singular tubes S(i,i,:), non-increasing.
  std::vector<Scalar> tube_norms;
  TransformSpec<Scalar> transform;

  Index rank_capacity() const { return sigma.rows(); }
};

namespace detail {

template <typename Scalar>
using SliceSvd = Eigen::BDCSVD<Matrix<Scalar>>;

template <typename Scalar>
void check_svd(const SliceSvd<Scalar>& svd, Index slice) {
  if (svd.info() != Eigen::Success)
    throw NumericalError("SVD of transform-domain slice " +
                         std::to_string(slice) + " did not converge");
}

}  // namespace detail

/// Computes the c-SVD slice by slice in the transform domain.
///
/// Within every transformed slice the singular values come out non-increasing.
/// Tube norms are then read off the assembled spatial S; if a non-orthogonal
/// transform leaves them out of order, tubes are stably re-sorted (ties keep
/// the lower index) and the columns of U, V follow.
template <typename Scalar>
CSvdFactors<Scalar> csvd(const Tensor3<Scalar>& a, const TransformSpec<Scalar>& t) {
  t.check(a);
  const Index m = a.rows(), n = a.cols(), p = a.depth();
  const Index q = std::min(m, n);
  const Tensor3<Scalar> a_hat = l_transform(a, t);

  Tensor3<Scalar> u_hat(m, q, p), v_hat(n, q, p);
  Matrix<Scalar> sigma(q, p);
  parallel_for(p, [&](Index k) {
    const Matrix<Scalar> slice = a_hat.slice(k);
    detail::SliceSvd<Scalar> svd(slice, Eigen::ComputeThinU | Eigen::ComputeThinV);
    detail::check_svd(svd, k);
    u_hat.slice(k) = svd.matrixU();
    v_hat.slice(k) = svd.matrixV();
    sigma.col(k) = svd.singularValues();
  });

  Tensor3<Scalar> s_hat(q, q, p);
  for (Index k = 0; k < p; ++k)
    for (Index i = 0; i < q; ++i) s_hat(i, i, k) = sigma(i, k);
  Tensor3<Scalar> s = l_inverse(s_hat, t);

  std::vector<Scalar> norms(static_cast<std::size_t>(q));
  for (Index i = 0; i < q; ++i) norms[static_cast<std::size_t>(i)] = s.tube(i, i).norm();

  std::vector<Index> order(static_cast<std::size_t>(q));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) {
    return norms[static_cast<std::size_t>(x)] > norms[static_cast<std::size_t>(y)];
  });
  const bool sorted = std::is_sorted(order.begin(), order.end());
  if (!sorted) {
    Tensor3<Scalar> u2(m, q, p), v2(n, q, p);
    Matrix<Scalar> sigma2(q, p);
    std::vector<Scalar> norms2(norms.size());
    for (Index dst = 0; dst < q; ++dst) {
      const Index src = order[static_cast<std::size_t>(dst)];
      for (Index k = 0; k < p; ++k) {
        u2.slice(k).col(dst) = u_hat.slice(k).col(src);
        v2.slice(k).col(dst) = v_hat.slice(k).col(src);
      }
      sigma2.row(dst) = sigma.row(src);
      norms2[static_cast<std::size_t>(dst)] = norms[static_cast<std::size_t>(src)];
    }
    u_hat = std::move(u2);
    v_hat = std::move(v2);
    sigma = std::move(sigma2);
    norms = std::move(norms2);
    s_hat = Tensor3<Scalar>(q, q, p);
    for (Index k = 0; k < p; ++k)
      for (Index i = 0; i < q; ++i) s_hat(i, i, k) = sigma(i, k);
    s = l_inverse(s_hat, t);
  }

  return CSvdFactors<Scalar>{l_inverse(u_hat, t), std::move(s), l_inverse(v_hat, t),
                             std::move(sigma), std::move(norms), t};
}

/// Keeps the leading r singular tubes: U_r *_c S_r *_c V_r^T.
template <typename Scalar>
Tensor3<Scalar> truncate_csvd(const CSvdFactors<Scalar>& f, Index r) {
  const Index q = f.rank_capacity();
  if (r < 1 || r > q)
    throw DomainError("truncation rank " + std::to_string(r) +
                      " outside [1, " + std::to_string(q) + "]");
  const Tensor3<Scalar> u_hat = l_transform(f.u, f.transform);
  const Tensor3<Scalar> v_hat = l_transform(f.v, f.transform);
  Tensor3<Scalar> out_hat(f.u.rows(), f.v.rows(), f.u.depth());
  parallel_for(out_hat.depth(), [&](Index k) {
    const auto uk = u_hat.slice(k).leftCols(r);
    const auto vk = v_hat.slice(k).leftCols(r);
    out_hat.slice(k).noalias() =
        uk * f.sigma.col(k).head(r).asDiagonal() * vk.transpose();
  });
  return l_inverse(out_hat, f.transform);
}

/// Per-slice singular values of L(A) without computing singular vectors.
template <typename Scalar>
Matrix<Scalar> transform_domain_spectrum(const Tensor3<Scalar>& a,
                                         const TransformSpec<Scalar>& t) {
  t.check(a);
  const Tensor3<Scalar> a_hat = l_transform(a, t);
  Matrix<Scalar> sigma(std::min(a.rows(), a.cols()), a.depth());
  parallel_for(a.depth(), [&](Index k) {
    const Matrix<Scalar> slice = a_hat.slice(k);
    detail::SliceSvd<Scalar> svd(slice);
    detail::check_svd(svd, k);
    sigma.col(k) = svd.singularValues();
  });
  return sigma;
}

/// Number of singular tubes whose largest transform-domain entry exceeds
/// tol * (leading tube norm).
template <typename Scalar>
Index tubal_rank(const Tensor3<Scalar>& a, const TransformSpec<Scalar>& t,
                 Scalar tol) {
  const CSvdFactors<Scalar> f = csvd(a, t);
  if (f.tube_norms.empty() || f.tube_norms.front() == Scalar(0)) return 0;
  const Scalar threshold = tol * f.tube_norms.front();
  Index rank = 0;
  for (Index i = 0; i < f.sigma.rows(); ++i)
    if (f.sigma.row(i).cwiseAbs().maxCoeff() > threshold) ++rank;
  return rank;
}

/// Mean matrix rank of the transformed frontal slices; a slice's rank counts
/// singular values above tol * (its largest singular value).
template <typename Scalar>
double average_rank(const Tensor3<Scalar>& a, const TransformSpec<Scalar>& t,
                    Scalar tol) {
  const Matrix<Scalar> sigma = transform_domain_spectrum(a, t);
  Index total = 0;
  for (Index k = 0; k < sigma.cols(); ++k) {
    const Scalar top = sigma.col(k).maxCoeff();
    if (top == Scalar(0)) continue;
    total += (sigma.col(k).array() > tol * top).count();
  }
  return static_cast<double>(total) / static_cast<double>(a.depth());
}

}  // namespace tlaser
