#pragma once

// Reference implementations used as independent oracles: plain index loops
// and closed-form formulas, no shared code paths with the library kernels.

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/QR>

#include "tlaser/transform.hpp"

namespace oracle {

using tlaser::Index;
using Mat = tlaser::Matrix<double>;
using T3 = tlaser::Tensor3d;

inline T3 random_tensor(Index m, Index n, Index p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return T3::Random(m, n, p, rng);
}

inline Mat random_matrix(Index m, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  Mat x(m, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) x(i, j) = dist(rng);
  return x;
}

inline double sum_of_squares(const T3& a) {
  long double s = 0;
  for (Index k = 0; k < a.depth(); ++k)
    for (Index i = 0; i < a.rows(); ++i)
      for (Index j = 0; j < a.cols(); ++j) s += (long double)a(i, j, k) * a(i, j, k);
  return (double)s;
}

// Orthonormal DCT-II evaluated entry by entry in long double.
inline Mat dct_cosine(Index p) {
  Mat c(p, p);
  const long double pi = std::numbers::pi_v<long double>;
  for (Index k = 0; k < p; ++k)
    for (Index j = 0; j < p; ++j) {
      const long double s = k == 0 ? std::sqrt(1.0L / p) : std::sqrt(2.0L / p);
      c(k, j) = (double)(s * std::cos(pi * (2 * j + 1) * k / (2.0L * p)));
    }
  return c;
}

// B(i,j,k) = sum_l X(., l) A(...) along `mode`, by direct summation.
inline T3 mode_product(const T3& a, const Mat& x, int mode) {
  const Index m = a.rows(), n = a.cols(), p = a.depth(), J = x.rows();
  T3 b(mode == 1 ? J : m, mode == 2 ? J : n, mode == 3 ? J : p);
  for (Index k = 0; k < b.depth(); ++k)
    for (Index i = 0; i < b.rows(); ++i)
      for (Index j = 0; j < b.cols(); ++j) {
        long double s = 0;
        if (mode == 1)
          for (Index l = 0; l < m; ++l) s += (long double)x(i, l) * a(l, j, k);
        else if (mode == 2)
          for (Index l = 0; l < n; ++l) s += (long double)x(j, l) * a(i, l, k);
        else
          for (Index l = 0; l < p; ++l) s += (long double)x(k, l) * a(i, j, l);
        b(i, j, k) = (double)s;
      }
  return b;
}

inline Mat slice_of(const T3& a, Index k) {
  Mat s(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) s(i, j) = a(i, j, k);
  return s;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.rows(), b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < b.cols(); ++j) {
      long double s = 0;
      for (Index l = 0; l < a.cols(); ++l) s += (long double)a(i, l) * b(l, j);
      c(i, j) = (double)s;
    }
  return c;
}

// Slice-by-slice product of two tensors, triple loops.
inline T3 facewise(const T3& a, const T3& b) {
  T3 c(a.rows(), b.cols(), a.depth());
  for (Index k = 0; k < a.depth(); ++k) {
    const Mat s = matmul(slice_of(a, k), slice_of(b, k));
    for (Index i = 0; i < c.rows(); ++i)
      for (Index j = 0; j < c.cols(); ++j) c(i, j, k) = s(i, j);
  }
  return c;
}

// c-product through the cosine oracle: transform, facewise, inverse (C^T).
inline T3 c_product(const T3& a, const T3& b) {
  const Mat c = dct_cosine(a.depth());
  return mode_product(facewise(mode_product(a, c, 3), mode_product(b, c, 3)),
                      Mat(c.transpose()), 3);
}

inline double rel_diff(const T3& a, const T3& b) {
  long double num = 0, den = 0;
  for (Index k = 0; k < a.depth(); ++k)
    for (Index i = 0; i < a.rows(); ++i)
      for (Index j = 0; j < a.cols(); ++j) {
        const long double d = (long double)a(i, j, k) - b(i, j, k);
        num += d * d;
        den += (long double)b(i, j, k) * b(i, j, k);
      }
  return den == 0 ? std::sqrt((double)num) : std::sqrt((double)(num / den));
}

inline double rel_diff(const Mat& a, const Mat& b) {
  const double den = b.norm();
  return den == 0 ? (a - b).norm() : (a - b).norm() / den;
}

// m x q matrix with orthonormal columns.
inline Mat random_orthonormal(Index m, Index q, std::uint64_t seed) {
  Eigen::HouseholderQR<Mat> qr(random_matrix(m, q, seed));
  return qr.householderQ() * Mat::Identity(m, q);
}

// Tensor whose transform-domain slices are U_k diag(sigma) V_k^T with random
// orthonormal U_k, V_k, so the per-slice spectra are known exactly.
inline T3 tensor_with_spectrum(Index m, Index n, const Mat& sigma, std::uint64_t seed) {
  const Index p = sigma.cols(), q = sigma.rows();
  T3 hat(m, n, p);
  for (Index k = 0; k < p; ++k) {
    const Mat u = random_orthonormal(m, q, seed + 2 * k);
    const Mat v = random_orthonormal(n, q, seed + 2 * k + 1);
    hat.slice(k) = u * sigma.col(k).asDiagonal() * v.transpose();
  }
  return tlaser::l_inverse(hat, tlaser::TransformSpec<double>::Dct(p));
}

// Geometric per-slice spectrum sigma_i = scale_k * ratio^i, scale_k = 1 + k/p.
inline T3 geometric_tensor(Index m, Index n, Index p, double ratio, std::uint64_t seed) {
  const Index q = std::min(m, n);
  Mat sigma(q, p);
  for (Index k = 0; k < p; ++k)
    for (Index i = 0; i < q; ++i)
      sigma(i, k) = (1.0 + double(k) / double(p)) * std::pow(ratio, double(i));
  return tensor_with_spectrum(m, n, sigma, seed);
}

}  // namespace oracle
