#pragma once

#include <string>

#include "tlaser/tensor.hpp"

namespace tlaser {

enum class WeightKindTag { Attention, FfnIn, FfnOut };

/// Structural description of a transformer weight matrix.
///   Attention: d_m x d_m, heads_or_blocks = n_h, d_h = d_m / n_h
///   FfnIn:     (r d_m) x d_m, heads_or_blocks = r
///   FfnOut:    d_m x (r d_m), heads_or_blocks = r
struct WeightKind {
  WeightKindTag kind = WeightKindTag::Attention;
  Index d_m = 0;
  Index heads_or_blocks = 0;

  Index d_h() const { return kind == WeightKindTag::Attention ? d_m / heads_or_blocks : d_m; }

  // Tensor shape produced by the matching tensorization operator.
  Index tensor_rows() const { return d_h(); }
  Index tensor_cols() const { return d_m; }
  Index tensor_depth() const { return heads_or_blocks; }

  Index matrix_rows() const {
    return kind == WeightKindTag::FfnIn ? heads_or_blocks * d_m : d_m;
  }
  Index matrix_cols() const {
    return kind == WeightKindTag::FfnOut ? heads_or_blocks * d_m : d_m;
  }

  // Derives the kind from a matrix shape; throws if the shape does not fit.
  static WeightKind FromMatrixShape(WeightKindTag kind, Index rows, Index cols,
                                    Index heads_or_blocks);
};

inline WeightKind WeightKind::FromMatrixShape(WeightKindTag kind, Index rows,
                                              Index cols, Index heads_or_blocks) {
  if (heads_or_blocks <= 0)
    throw DomainError("heads/blocks count must be positive");
  const std::string shape = std::to_string(rows) + "x" + std::to_string(cols);
  switch (kind) {
    case WeightKindTag::Attention:
      if (rows != cols)
        throw DomainError("attention weight must be square, got " + shape +
                          " (grouped-query layouts are not supported)");
      if (rows % heads_or_blocks != 0)
        throw DomainError("d_m = " + std::to_string(rows) +
                          " is not divisible by n_h = " +
                          std::to_string(heads_or_blocks));
      return {kind, rows, heads_or_blocks};
    case WeightKindTag::FfnIn:
      if (rows != heads_or_blocks * cols)
        throw DomainError("ffn_in weight must be (r d_m) x d_m with r = " +
                          std::to_string(heads_or_blocks) + ", got " + shape);
      return {kind, cols, heads_or_blocks};
    case WeightKindTag::FfnOut:
      if (cols != heads_or_blocks * rows)
        throw DomainError("ffn_out weight must be d_m x (r d_m) with r = " +
                          std::to_string(heads_or_blocks) + ", got " + shape);
      return {kind, rows, heads_or_blocks};
  }
  throw DomainError("unknown weight kind");
}

inline std::string to_string(WeightKindTag kind) {
  switch (kind) {
    case WeightKindTag::Attention: return "attention";
    case WeightKindTag::FfnIn: return "ffn_in";
    case WeightKindTag::FfnOut: return "ffn_out";
  }
  return "?";
}

inline WeightKindTag weight_kind_from_string(const std::string& name) {
  if (name == "attention") return WeightKindTag::Attention;
  if (name == "ffn_in") return WeightKindTag::FfnIn;
  if (name == "ffn_out") return WeightKindTag::FfnOut;
  throw DomainError("unknown weight kind '" + name + "'");
}

// All operators below copy entries only; no arithmetic touches the values.

/// W (d_m x d_m) -> T (d_h x d_m x n_h), T(i,j,h) = W(h d_h + i, j).
template <typename Derived>
Tensor3<typename Derived::Scalar> phi_attn(const Eigen::MatrixBase<Derived>& w,
                                           Index n_h) {
  const WeightKind kind =
      WeightKind::FromMatrixShape(WeightKindTag::Attention, w.rows(), w.cols(), n_h);
  const Index d_h = kind.d_h();
  Tensor3<typename Derived::Scalar> t(d_h, kind.d_m, n_h);
  for (Index h = 0; h < n_h; ++h) t.slice(h) = w.middleRows(h * d_h, d_h);
  return t;
}

template <typename Scalar>
Matrix<Scalar> phi_attn_inv(const Tensor3<Scalar>& t) {
  const Index d_h = t.rows(), n_h = t.depth();
  if (d_h * n_h != t.cols())
    throw DomainError("attention tensor must be d_h x (d_h n_h) x n_h");
  Matrix<Scalar> w(d_h * n_h, t.cols());
  for (Index h = 0; h < n_h; ++h) w.middleRows(h * d_h, d_h) = t.slice(h);
  return w;
}

/// U (r d_m x d_m) -> T (d_m x d_m x r), T(i,j,b) = U(b d_m + i, j).
template <typename Derived>
Tensor3<typename Derived::Scalar> phi_ffn_in(const Eigen::MatrixBase<Derived>& u,
                                             Index r) {
  const WeightKind kind =
      WeightKind::FromMatrixShape(WeightKindTag::FfnIn, u.rows(), u.cols(), r);
  const Index d_m = kind.d_m;
  Tensor3<typename Derived::Scalar> t(d_m, d_m, r);
  for (Index b = 0; b < r; ++b) t.slice(b) = u.middleRows(b * d_m, d_m);
  return t;
}

template <typename Scalar>
Matrix<Scalar> phi_ffn_in_inv(const Tensor3<Scalar>& t) {
  if (t.rows() != t.cols()) throw DomainError("ffn tensor must be d_m x d_m x r");
  const Index d_m = t.rows(), r = t.depth();
  Matrix<Scalar> u(r * d_m, d_m);
  for (Index b = 0; b < r; ++b) u.middleRows(b * d_m, d_m) = t.slice(b);
  return u;
}

/// U (d_m x r d_m) -> T (d_m x d_m x r), T(i,j,b) = U(i, b d_m + j).
template <typename Derived>
Tensor3<typename Derived::Scalar> phi_ffn_out(const Eigen::MatrixBase<Derived>& u,
                                              Index r) {
  const WeightKind kind =
      WeightKind::FromMatrixShape(WeightKindTag::FfnOut, u.rows(), u.cols(), r);
  const Index d_m = kind.d_m;
  Tensor3<typename Derived::Scalar> t(d_m, d_m, r);
  for (Index b = 0; b < r; ++b) t.slice(b) = u.middleCols(b * d_m, d_m);
  return t;
}

template <typename Scalar>
Matrix<Scalar> phi_ffn_out_inv(const Tensor3<Scalar>& t) {
  if (t.rows() != t.cols()) throw DomainError("ffn tensor must be d_m x d_m x r");
  const Index d_m = t.rows(), r = t.depth();
  Matrix<Scalar> u(d_m, r * d_m);
  for (Index b = 0; b < r; ++b) u.middleCols(b * d_m, d_m) = t.slice(b);
  return u;
}

template <typename Derived>
Tensor3<typename Derived::Scalar> phi_forward(const Eigen::MatrixBase<Derived>& w,
                                              const WeightKind& kind) {
  switch (kind.kind) {
    case WeightKindTag::Attention: return phi_attn(w, kind.heads_or_blocks);
    case WeightKindTag::FfnIn: return phi_ffn_in(w, kind.heads_or_blocks);
    case WeightKindTag::FfnOut: return phi_ffn_out(w, kind.heads_or_blocks);
  }
  throw DomainError("unknown weight kind");
}

/// Inverse tensorization for the given kind; the tensor shape must be the one
/// the forward operator produces for `kind`.
template <typename Scalar>
Matrix<Scalar> phi_inverse(const Tensor3<Scalar>& t, const WeightKind& kind) {
  if (t.rows() != kind.tensor_rows() || t.cols() != kind.tensor_cols() ||
      t.depth() != kind.tensor_depth())
    throw DomainError("tensor shape " + std::to_string(t.rows()) + "x" +
                      std::to_string(t.cols()) + "x" + std::to_string(t.depth()) +
                      " does not match " + to_string(kind.kind) + " layout " +
                      std::to_string(kind.tensor_rows()) + "x" +
                      std::to_string(kind.tensor_cols()) + "x" +
                      std::to_string(kind.tensor_depth()));
  switch (kind.kind) {
    case WeightKindTag::Attention: return phi_attn_inv(t);
    case WeightKindTag::FfnIn: return phi_ffn_in_inv(t);
    case WeightKindTag::FfnOut: return phi_ffn_out_inv(t);
  }
  throw DomainError("unknown weight kind");
}

}  // namespace tlaser
