#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "tlaser/c_algebra.hpp"
#include "tlaser/rank_select.hpp"
#include "tlaser/tensorize.hpp"

namespace tlaser {

enum class Method { None, Laser, Tlaser };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::None: return "none";
    case Method::Laser: return "laser";
    case Method::Tlaser: return "tlaser";
  }
  return "?";
}

inline Method method_from_string(const std::string& s) {
  if (s == "laser") return Method::Laser;
  if (s == "tlaser") return Method::Tlaser;
  if (s == "none") return Method::None;
  throw DomainError("unknown method '" + s + "'");
}

struct LayerReport {
  std::string layer_name;
  Method method = Method::None;
  Index rank_used = 0;      // 0 only for pass-through layers
  double rel_error = 0.0;   // ||W - W_r||_F / ||W||_F
  std::uint64_t params_original = 0;
  std::uint64_t params_retained = 0;
  bool over_budget = false;  // params_retained > params_original
  std::vector<double> spectrum_prefix;  // leading <= 32 tube / singular norms
  std::vector<std::string> notes;
};

inline constexpr std::size_t kSpectrumPrefix = 32;

/// Retained factor entries for rank-r matrix SVD of an m x n matrix.
inline std::uint64_t laser_params(Index m, Index n, Index r) {
  return static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(m + n + 1);
}

/// Retained entries for slice-rank r truncation of a d_h x d_m x p tensor.
inline std::uint64_t tlaser_params(Index d_h, Index d_m, Index p, Index r) {
  return static_cast<std::uint64_t>(p) * static_cast<std::uint64_t>(r) *
         static_cast<std::uint64_t>(d_h + d_m + 1);
}

/// Largest matrix rank whose laser_params fits in `budget`, capped at
/// min(m, n). Returns 0 when not even rank 1 fits.
inline Index budget_matched_laser_rank(Index m, Index n, std::uint64_t budget) {
  const auto r = static_cast<Index>(budget / static_cast<std::uint64_t>(m + n + 1));
  return std::min(r, std::min(m, n));
}

/// ||w - w_r||_F / ||w||_F. Defined as 0 when both are zero.
template <typename DerivedA, typename DerivedB>
double rel_error(const Eigen::MatrixBase<DerivedA>& w,
                 const Eigen::MatrixBase<DerivedB>& w_r) {
  if (w.rows() != w_r.rows() || w.cols() != w_r.cols())
    throw DomainError("rel_error: shape mismatch");
  const double denom = static_cast<double>(frobenius_norm(w));
  const double num = static_cast<double>(frobenius_norm((w - w_r).eval()));
  if (denom == 0.0) {
    if (num == 0.0) return 0.0;
    throw DomainError("rel_error: reference matrix is zero but approximation is not");
  }
  return num / denom;
}

/// Best rank-r approximation by truncated matrix SVD.
template <typename Derived>
Matrix<typename Derived::Scalar> laser_matrix(const Eigen::MatrixBase<Derived>& w,
                                              Index r) {
  using Scalar = typename Derived::Scalar;
  const Index q = std::min(w.rows(), w.cols());
  if (r < 1 || r > q)
    throw DomainError("laser rank " + std::to_string(r) + " outside [1, " +
                      std::to_string(q) + "]");
  const Matrix<Scalar> dense = w;
  Eigen::BDCSVD<Matrix<Scalar>> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("matrix SVD did not converge");
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
         svd.matrixV().leftCols(r).transpose();
}

template <typename Scalar>
struct LayerResult {
  Matrix<Scalar> weight;   // reconstructed, same shape as the input
  LayerReport report;
  // Sum of squared discarded singular values (transform-domain for TLASER).
  double discarded_energy = 0.0;
};

/// Matrix LASER with a report.
template <typename Scalar>
LayerResult<Scalar> laser_layer(const Matrix<Scalar>& w, Index r,
                                const std::string& name = {}) {
  const Index q = std::min(w.rows(), w.cols());
  if (r < 1 || r > q)
    throw DomainError("laser rank " + std::to_string(r) + " outside [1, " +
                      std::to_string(q) + "]");
  Eigen::BDCSVD<Matrix<Scalar>> svd(w, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("matrix SVD did not converge");
  const Vector<Scalar>& sv = svd.singularValues();

  LayerResult<Scalar> out;
  out.weight = svd.matrixU().leftCols(r) * sv.head(r).asDiagonal() *
               svd.matrixV().leftCols(r).transpose();
  out.discarded_energy = static_cast<double>(sv.tail(q - r).squaredNorm());
  LayerReport& rep = out.report;
  rep.layer_name = name;
  rep.method = Method::Laser;
  rep.rank_used = r;
  rep.rel_error = rel_error(w, out.weight);
  rep.params_original = static_cast<std::uint64_t>(w.size());
  rep.params_retained = laser_params(w.rows(), w.cols(), r);
  rep.over_budget = rep.params_retained > rep.params_original;
  for (Index i = 0; i < std::min<Index>(q, kSpectrumPrefix); ++i)
    rep.spectrum_prefix.push_back(static_cast<double>(sv(i)));
  return out;
}

/// TLASER on one weight matrix:
///   tensorize -> L -> per-slice SVD -> rank from the singular tube norms ->
///   keep r leading triplets in every slice -> L^-1 -> inverse tensorize.
///
/// A fixed rank above min(d_h, d_m) is clamped and noted in the report.
template <typename Scalar>
LayerResult<Scalar> tlaser_layer(const Matrix<Scalar>& w, const WeightKind& kind,
                                 const RankPolicy& policy,
                                 const TransformSpec<Scalar>& t,
                                 const std::string& name = {}) {
  const WeightKind checked = WeightKind::FromMatrixShape(kind.kind, w.rows(), w.cols(),
                                                         kind.heads_or_blocks);
  const Tensor3<Scalar> tensor = phi_forward(w, checked);
  const Tensor3<Scalar> hat = l_transform(tensor, t);
  const Index d_h = tensor.rows(), d_m = tensor.cols(), p = tensor.depth();
  const Index q = std::min(d_h, d_m);

  std::vector<Matrix<Scalar>> u(static_cast<std::size_t>(p)), v(static_cast<std::size_t>(p));
  Matrix<Scalar> sigma(q, p);
  parallel_for(p, [&](Index k) {
    const Matrix<Scalar> slice = hat.slice(k);
    Eigen::BDCSVD<Matrix<Scalar>> svd(slice, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success)
      throw NumericalError("SVD of transform-domain slice " + std::to_string(k) +
                           " did not converge");
    u[static_cast<std::size_t>(k)] = svd.matrixU();
    v[static_cast<std::size_t>(k)] = svd.matrixV();
    sigma.col(k) = svd.singularValues();
  });

  // Tube norms of the spatial S = L^-1(diag tubes of sigma).
  std::vector<double> tube_norms(static_cast<std::size_t>(q));
  for (Index i = 0; i < q; ++i)
    tube_norms[static_cast<std::size_t>(i)] = static_cast<double>(
        l_inverse(Tube<Scalar>(sigma.row(i).transpose()), t).norm());

  LayerResult<Scalar> out;
  LayerReport& rep = out.report;
  if (policy.mode == RankMode::FixedRank && policy.r > q)
    rep.notes.push_back("requested rank " + std::to_string(policy.r) +
                        " clamped to " + std::to_string(q));
  std::vector<double> sorted_norms = tube_norms;
  // Orthonormal transforms keep tubes ordered; others may need a sort for the
  // energy criterion.
  std::sort(sorted_norms.begin(), sorted_norms.end(), std::greater<>());
  const Index r = policy_rank(policy, q, sorted_norms);

  Tensor3<Scalar> trunc_hat(d_h, d_m, p);
  double discarded = 0.0;
  for (Index k = 0; k < p; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    trunc_hat.slice(k).noalias() = u[ks].leftCols(r) *
                                   sigma.col(k).head(r).asDiagonal() *
                                   v[ks].leftCols(r).transpose();
    discarded += static_cast<double>(sigma.col(k).tail(q - r).squaredNorm());
  }
  out.weight = phi_inverse(l_inverse(trunc_hat, t), checked);
  out.discarded_energy = discarded;

  rep.layer_name = name;
  rep.method = Method::Tlaser;
  rep.rank_used = r;
  rep.rel_error = rel_error(w, out.weight);
  rep.params_original = static_cast<std::uint64_t>(w.size());
  rep.params_retained = tlaser_params(d_h, d_m, p, r);
  rep.over_budget = rep.params_retained > rep.params_original;
  for (std::size_t i = 0; i < std::min(sorted_norms.size(), kSpectrumPrefix); ++i)
    rep.spectrum_prefix.push_back(sorted_norms[i]);
  return out;
}

enum class ComparisonMode { EqualBudget, EqualRatio };

inline std::string to_string(ComparisonMode m) {
  return m == ComparisonMode::EqualBudget ? "equal_budget" : "equal_ratio";
}

inline ComparisonMode comparison_mode_from_string(const std::string& s) {
  if (s == "equal_budget") return ComparisonMode::EqualBudget;
  if (s == "equal_ratio") return ComparisonMode::EqualRatio;
  throw DomainError("unknown comparison mode '" + s + "'");
}

struct Comparison {
  LayerReport tlaser;
  LayerReport laser;
  ComparisonMode mode = ComparisonMode::EqualBudget;
};

/// Runs TLASER at slice rank r_tensor and matrix LASER on the same weight.
///
/// equal_budget: LASER gets the largest rank whose parameter count does not
/// exceed TLASER's (rank 1, flagged over budget, if none fits).
/// equal_ratio: LASER keeps the same fraction r_tensor / min(d_h, d_m) of its
/// own maximal rank.
template <typename Scalar>
Comparison compare_methods(const Matrix<Scalar>& w, const WeightKind& kind,
                           Index r_tensor, const TransformSpec<Scalar>& t,
                           ComparisonMode mode = ComparisonMode::EqualBudget,
                           const std::string& name = {}) {
  const WeightKind checked = WeightKind::FromMatrixShape(kind.kind, w.rows(), w.cols(),
                                                         kind.heads_or_blocks);
  const Index q_t = std::min(checked.d_h(), checked.d_m);
  if (r_tensor < 1 || r_tensor > q_t)
    throw DomainError("tensor rank " + std::to_string(r_tensor) + " outside [1, " +
                      std::to_string(q_t) + "]");
  Comparison cmp;
  cmp.mode = mode;
  cmp.tlaser = tlaser_layer(w, checked, RankPolicy::Fixed(r_tensor), t, name).report;

  const Index q_m = std::min(w.rows(), w.cols());
  Index r_laser = 0;
  if (mode == ComparisonMode::EqualBudget) {
    r_laser = budget_matched_laser_rank(w.rows(), w.cols(), cmp.tlaser.params_retained);
  } else {
    r_laser = ratio_rank(q_m, static_cast<double>(r_tensor) / static_cast<double>(q_t));
  }
  bool forced = false;
  if (r_laser < 1) {
    r_laser = 1;
    forced = true;
  }
  cmp.laser = laser_layer(w, r_laser, name).report;
  if (forced) {
    cmp.laser.over_budget = true;
    cmp.laser.notes.push_back("no LASER rank fits the TLASER budget; using rank 1");
  }
  return cmp;
}

}  // namespace tlaser
