#pragma once

#include <random>
#include <vector>

#include "tlaser/csvd.hpp"

namespace tlaser {

template <typename Scalar>
struct NormalizedSlice {
  LateralSlice<Scalar> q;
  Tube<Scalar> alpha;
  // Frontal indices (transform domain) that were too small to normalize and
  // received the canonical unit vector e_1 with alpha = 0.
  std::vector<Index> degenerate;
};

/// Splits x into an f-unit lateral slice and a tube, x = q *_c alpha.
///
/// In the transform domain each frontal column of x is scaled to unit norm;
/// columns with norm <= tol * ||x||_F are replaced by e_1 with alpha = 0.
template <typename Scalar>
NormalizedSlice<Scalar> normalize_slice(const LateralSlice<Scalar>& x,
                                        const TransformSpec<Scalar>& t,
                                        Scalar tol) {
  const Scalar norm = frobenius_norm(x.values());
  if (norm == Scalar(0))
    throw DomainError("normalize_slice: input slice is zero; supply a new start slice");
  const LateralSlice<Scalar> x_hat = l_transform(x, t);
  Matrix<Scalar> q_hat(x.rows(), x.depth());
  Tube<Scalar> alpha_hat(x.depth());
  std::vector<Index> degenerate;
  for (Index k = 0; k < x.depth(); ++k) {
    const Scalar a = x_hat.values().col(k).norm();
    if (a > tol * norm) {
      q_hat.col(k) = x_hat.values().col(k) / a;
      alpha_hat(k) = a;
    } else {
      q_hat.col(k) = Vector<Scalar>::Unit(x.rows(), 0);
      alpha_hat(k) = Scalar(0);
      degenerate.push_back(k);
    }
  }
  return {l_inverse(LateralSlice<Scalar>(std::move(q_hat)), t),
          l_inverse(alpha_hat, t), std::move(degenerate)};
}

/// Output of the partial bidiagonalization A *_c P_k = Q_k *_c B_k,
/// A^T *_c Q_k = P_k *_c B_k^T + R_k *_c E_k^T.
template <typename Scalar>
struct BidiagState {
  Tensor3<Scalar> p_basis;         // n x k x p
  Tensor3<Scalar> q_basis;         // m x k x p
  Tensor3<Scalar> b;               // k x k x p, f-upper bidiagonal
  LateralSlice<Scalar> residual;   // n x 1 x p, R_k = P_{k+1} *_c beta_k
  Index steps = 0;                 // k actually performed
  // True when the residual vanished (norm below 1e-12 ||A||_F) at step
  // `steps` <= k: span(P_k) is then invariant and B_k carries exact singular
  // tubes of A.
  bool breakdown = false;
};

namespace detail {

// Classical Gram-Schmidt against the first `cols` columns of `basis`, with a
// second pass when the first one removed most of the vector.
template <typename Scalar>
void reorthogonalize(Vector<Scalar>& x, const Matrix<Scalar>& basis, Index cols) {
  if (cols == 0) return;
  const auto b = basis.leftCols(cols);
  const Scalar before = x.norm();
  x -= b * (b.transpose() * x);
  if (x.norm() < Scalar(0.7071) * before) x -= b * (b.transpose() * x);
}

// Unit vector orthogonal to the first `cols` basis columns, built from the
// first canonical vector that survives projection.
template <typename Scalar>
Vector<Scalar> canonical_completion(const Matrix<Scalar>& basis, Index cols) {
  for (Index j = 0; j < basis.rows(); ++j) {
    Vector<Scalar> e = Vector<Scalar>::Unit(basis.rows(), j);
    reorthogonalize(e, basis, cols);
    reorthogonalize(e, basis, cols);
    const Scalar nrm = e.norm();
    if (nrm > Scalar(0.5)) return e / nrm;
  }
  throw NumericalError("no orthogonal completion exists for a full basis");
}

template <typename Scalar>
Scalar column_norm_total(const std::vector<Vector<Scalar>>& cols) {
  Scalar sq(0);
  for (const auto& c : cols) sq += c.squaredNorm();
  return std::sqrt(sq);
}

}  // namespace detail

/// Partial tensor Lanczos bidiagonalization under the c-product with full
/// reorthogonalization.
///
/// Works in the transform domain, where every step is a matrix Golub-Kahan
/// step on each frontal slice. `p1` is normalized with normalize_slice before
/// use. Breakdown is declared when the residual slice has transform-domain
/// norm below 1e-12 * ||A||_F; it then holds an invariant subspace and
/// `steps` < k. Individual faces that vanish (in either recurrence) are
/// completed with an orthogonal canonical vector and a zero coefficient.
template <typename Scalar>
BidiagState<Scalar> lanczos_bidiag(const Tensor3<Scalar>& a,
                                   const LateralSlice<Scalar>& p1, Index k,
                                   const TransformSpec<Scalar>& t) {
  t.check(a);
  const Index m = a.rows(), n = a.cols(), p = a.depth();
  if (k < 1 || k > std::min(m, n))
    throw DomainError("lanczos_bidiag: k = " + std::to_string(k) +
                      " must lie in [1, min(m, n) = " +
                      std::to_string(std::min(m, n)) + "]");
  if (p1.rows() != n || p1.depth() != p)
    throw DomainError("lanczos_bidiag: start slice must be n x 1 x p");

  const Scalar a_norm = frobenius_norm(a);
  const Scalar threshold = Scalar(1e-12) * a_norm;
  const Tensor3<Scalar> a_hat = l_transform(a, t);

  std::vector<Matrix<Scalar>> a_faces(static_cast<std::size_t>(p));
  for (Index f = 0; f < p; ++f) a_faces[static_cast<std::size_t>(f)] = a_hat.slice(f);

  std::vector<Matrix<Scalar>> P(static_cast<std::size_t>(p), Matrix<Scalar>::Zero(n, k));
  std::vector<Matrix<Scalar>> Q(static_cast<std::size_t>(p), Matrix<Scalar>::Zero(m, k));
  Matrix<Scalar> alpha = Matrix<Scalar>::Zero(k, p);
  Matrix<Scalar> beta = Matrix<Scalar>::Zero(k, p);
  std::vector<Vector<Scalar>> work(static_cast<std::size_t>(p));

  // Normalizes work[f] into column `col` of `basis` (Q or P); returns the
  // transform-domain coefficients.
  auto normalize_into = [&](std::vector<Matrix<Scalar>>& basis, Index col,
                            Vector<Scalar>& coeff_out) {
    for (Index f = 0; f < p; ++f) {
      auto& x = work[static_cast<std::size_t>(f)];
      auto& bf = basis[static_cast<std::size_t>(f)];
      const Scalar nrm = x.norm();
      if (nrm > threshold) {
        bf.col(col) = x / nrm;
        coeff_out(f) = nrm;
      } else {
        bf.col(col) = detail::canonical_completion(bf, col);
        coeff_out(f) = Scalar(0);
      }
    }
  };

  BidiagState<Scalar> state;
  const NormalizedSlice<Scalar> start = normalize_slice(p1, t, Scalar(1e-12));
  const LateralSlice<Scalar> p1_hat = l_transform(start.q, t);
  for (Index f = 0; f < p; ++f) P[static_cast<std::size_t>(f)].col(0) = p1_hat.values().col(f);

  for (Index f = 0; f < p; ++f)
    work[static_cast<std::size_t>(f)] =
        a_faces[static_cast<std::size_t>(f)] * P[static_cast<std::size_t>(f)].col(0);
  if (detail::column_norm_total(work) <= threshold) {
    throw NumericalError("lanczos_bidiag: A *_c p1 vanishes; start slice lies in the null space");
  }
  {
    Vector<Scalar> coeff(p);
    normalize_into(Q, 0, coeff);
    alpha.row(0) = coeff.transpose();
  }

  Index steps = k;
  bool breakdown = false;
  std::vector<Vector<Scalar>> residual(static_cast<std::size_t>(p));
  for (Index i = 0; i < k; ++i) {
    // R_i = A^T Q_i - alpha_i P_i, reorthogonalized against P_1..P_i.
    parallel_for(p, [&](Index f) {
      const auto fs = static_cast<std::size_t>(f);
      Vector<Scalar> r = a_faces[fs].transpose() * Q[fs].col(i) - alpha(i, f) * P[fs].col(i);
      detail::reorthogonalize(r, P[fs], i + 1);
      residual[fs] = std::move(r);
    });
    if (detail::column_norm_total(residual) < threshold) {
      steps = i + 1;
      breakdown = true;
      break;
    }
    if (i + 1 == k) break;

    work = residual;
    Vector<Scalar> b_coeff(p);
    normalize_into(P, i + 1, b_coeff);
    beta.row(i) = b_coeff.transpose();

    // Q_{i+1} = A P_{i+1} - beta_i Q_i, reorthogonalized against Q_1..Q_i.
    parallel_for(p, [&](Index f) {
      const auto fs = static_cast<std::size_t>(f);
      Vector<Scalar> x = a_faces[fs] * P[fs].col(i + 1) - beta(i, f) * Q[fs].col(i);
      detail::reorthogonalize(x, Q[fs], i + 1);
      work[fs] = std::move(x);
    });
    // If A P_{i+1} already lies in span(Q_1..Q_i) the new Q slice is an
    // orthogonal completion with alpha_{i+1} = 0; the relations stay exact and
    // the following residual exposes any remaining directions.
    Vector<Scalar> a_coeff(p);
    normalize_into(Q, i + 1, a_coeff);
    alpha.row(i + 1) = a_coeff.transpose();
  }

  Tensor3<Scalar> p_hat(n, steps, p), q_hat(m, steps, p), b_hat(steps, steps, p);
  Matrix<Scalar> r_hat(n, p);
  for (Index f = 0; f < p; ++f) {
    const auto fs = static_cast<std::size_t>(f);
    p_hat.slice(f) = P[fs].leftCols(steps);
    q_hat.slice(f) = Q[fs].leftCols(steps);
    for (Index j = 0; j < steps; ++j) {
      b_hat(j, j, f) = alpha(j, f);
      if (j + 1 < steps) b_hat(j, j + 1, f) = beta(j, f);
    }
    r_hat.col(f) = residual[fs];
  }
  state.p_basis = l_inverse(p_hat, t);
  state.q_basis = l_inverse(q_hat, t);
  state.b = l_inverse(b_hat, t);
  state.residual = l_inverse(LateralSlice<Scalar>(std::move(r_hat)), t);
  state.steps = steps;
  state.breakdown = breakdown;
  return state;
}

/// E_k: the k x 1 x p lateral slice whose k-th tube is the identity tube and
/// whose other tubes are zero (the c-algebra's k-th canonical slice).
template <typename Scalar>
LateralSlice<Scalar> canonical_slice(Index k, Index index,
                                     const TransformSpec<Scalar>& t) {
  Matrix<Scalar> values = Matrix<Scalar>::Zero(k, t.size());
  values.row(index) = identity_tube(t).transpose();
  return LateralSlice<Scalar>(std::move(values));
}

struct FactorizationResiduals {
  double forward = 0;   // ||A *_c P_k - Q_k *_c B_k||_F
  double adjoint = 0;   // ||A^T *_c Q_k - P_k *_c B_k^T - R_k *_c E_k^T||_F
};

template <typename Scalar>
FactorizationResiduals factorization_residuals(const Tensor3<Scalar>& a,
                                               const BidiagState<Scalar>& s,
                                               const TransformSpec<Scalar>& t) {
  const Tensor3<Scalar> lhs1 = c_product(a, s.p_basis, t);
  const Tensor3<Scalar> rhs1 = c_product(s.q_basis, s.b, t);
  const Tensor3<Scalar> e_k = canonical_slice(s.steps, s.steps - 1, t).to_tensor();
  const Tensor3<Scalar> lhs2 = c_product(c_transpose(a, t), s.q_basis, t);
  const Tensor3<Scalar> rhs2 =
      c_product(s.p_basis, c_transpose(s.b, t), t) +
      c_product(s.residual.to_tensor(), c_transpose(e_k, t), t);
  return {static_cast<double>(frobenius_norm(lhs1 - rhs1)),
          static_cast<double>(frobenius_norm(lhs2 - rhs2))};
}

template <typename Scalar>
struct TripletEstimate {
  Tube<Scalar> s_tube;
  LateralSlice<Scalar> u_slice;  // m x 1 x p
  LateralSlice<Scalar> v_slice;  // n x 1 x p
  Scalar residual_norm = 0;
  bool converged = false;

  Scalar tube_norm() const { return s_tube.norm(); }
};

template <typename Scalar>
struct TripletResult {
  std::vector<TripletEstimate<Scalar>> triplets;
  Index steps = 0;
  // Set when the bidiagonalization broke down. If fewer than l steps were
  // possible, only that many triplets are returned.
  bool breakdown = false;
};

/// Seeded start slice: uniform entries in [-1, 1), then f-normalized.
template <typename Scalar>
LateralSlice<Scalar> random_start_slice(Index n, const TransformSpec<Scalar>& t,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix<Scalar> values(n, t.size());
  for (Index k = 0; k < values.cols(); ++k)
    for (Index i = 0; i < n; ++i) values(i, k) = static_cast<Scalar>(dist(rng));
  return normalize_slice(LateralSlice<Scalar>(std::move(values)), t, Scalar(1e-12)).q;
}

/// Approximates the l leading singular triplets from k Lanczos steps.
///
/// Triplets of B_k = U_B *_c S_B *_c V_B^T are lifted as s_i, Q_k *_c U_i and
/// P_k *_c V_i. The residual of triplet i is ||R_k *_c (E_k^T *_c U_i)||_F,
/// which equals the norm of beta_k *_c P_{k+1} *_c E_k^T *_c U_i; the triplet
/// is converged when that norm is <= eps.
template <typename Scalar>
TripletResult<Scalar> approx_triplets(const Tensor3<Scalar>& a, Index l, Index k,
                                      Scalar eps, const TransformSpec<Scalar>& t,
                                      std::uint64_t seed) {
  if (l < 1 || l >= k)
    throw DomainError("approx_triplets: need 1 <= l < k (l = " + std::to_string(l) +
                      ", k = " + std::to_string(k) + ")");
  const BidiagState<Scalar> state =
      lanczos_bidiag(a, random_start_slice(a.cols(), t, seed), k, t);
  const CSvdFactors<Scalar> fb = csvd(state.b, t);
  const Tensor3<Scalar> e_k_t =
      c_transpose(canonical_slice(state.steps, state.steps - 1, t).to_tensor(), t);

  TripletResult<Scalar> result;
  result.steps = state.steps;
  result.breakdown = state.breakdown;
  const Index count = std::min(l, state.steps);
  for (Index i = 0; i < count; ++i) {
    TripletEstimate<Scalar> est;
    est.s_tube = fb.s.tube(i, i);
    const LateralSlice<Scalar> u_i(LateralSlice<Scalar>::lateral_of(fb.u, i));
    const LateralSlice<Scalar> v_i(LateralSlice<Scalar>::lateral_of(fb.v, i));
    est.u_slice = c_apply(state.q_basis, u_i, t);
    est.v_slice = c_apply(state.p_basis, v_i, t);
    const Tensor3<Scalar> coupling = c_product(e_k_t, u_i.to_tensor(), t);
    const Tensor3<Scalar> term = c_product(state.residual.to_tensor(), coupling, t);
    est.residual_norm = frobenius_norm(term);
    est.converged = est.residual_norm <= eps;
    result.triplets.push_back(std::move(est));
  }
  return result;
}

}  // namespace tlaser
