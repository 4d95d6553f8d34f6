#include <doctest.h>

#include "oracles.hpp"
#include "tlaser/c_algebra.hpp"
#include "tlaser/csvd.hpp"

using namespace tlaser;
using oracle::Mat;
using oracle::T3;

namespace {
const auto kDct4 = TransformSpec<double>::Dct(4);
}

TEST_CASE("facewise product: identity slices, p = 1 and slice-matmul oracle") {
  const T3 a = oracle::random_tensor(3, 4, 2, 1);
  T3 eye(4, 4, 2);
  for (Index k = 0; k < 2; ++k) eye.slice(k).setIdentity();
  CHECK(facewise_product(a, eye) == a);

  const T3 b = oracle::random_tensor(4, 2, 2, 2);
  CHECK(oracle::rel_diff(facewise_product(a, b), oracle::facewise(a, b)) <= 1e-13);

  const T3 a1 = oracle::random_tensor(3, 5, 1, 3), b1 = oracle::random_tensor(5, 2, 1, 4);
  CHECK(oracle::rel_diff(Mat(facewise_product(a1, b1).slice(0)),
                         Mat(Mat(a1.slice(0)) * Mat(b1.slice(0)))) <= 1e-15);

  CHECK_THROWS_AS(facewise_product(a, a), DomainError);
  CHECK_THROWS_AS(facewise_product(a, oracle::random_tensor(4, 2, 3, 5)), DomainError);
}

TEST_CASE("c-product matches the cosine-transform oracle") {
  for (Index p : {1, 2, 3, 4, 7}) {
    const T3 a = oracle::random_tensor(3, 4, p, 10 + p), b = oracle::random_tensor(4, 2, p, 20 + p);
    CHECK(oracle::rel_diff(c_product(a, b, TransformSpec<double>::Dct(p)),
                           oracle::c_product(a, b)) <= 1e-13);
  }
  CHECK_THROWS_AS(c_product(oracle::random_tensor(2, 3, 4, 1), oracle::random_tensor(2, 3, 4, 2),
                            kDct4),
                  DomainError);
}

TEST_CASE("c-product with p = 1 is the matrix product") {
  const auto t = TransformSpec<double>::Dct(1);
  const T3 a = oracle::random_tensor(3, 3, 1, 5), b = oracle::random_tensor(3, 4, 1, 6);
  CHECK(oracle::rel_diff(Mat(c_product(a, b, t).slice(0)), Mat(Mat(a.slice(0)) * Mat(b.slice(0)))) <=
        1e-13);
}

TEST_CASE("identity tensor") {
  const auto one = c_identity(1, TransformSpec<double>::Dct(1));
  CHECK(one.realized(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-15));

  const auto id = c_identity(2, kDct4);
  const T3 h = l_transform(id.realized, kDct4);
  for (Index k = 0; k < 4; ++k)
    CHECK((Mat(h.slice(k)) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-14);
  // Off-diagonal tubes are exactly zero in both domains.
  for (Index k = 0; k < 4; ++k) {
    CHECK(id.realized(0, 1, k) == 0.0);
    CHECK(h(1, 0, k) == 0.0);
  }
  const Tube<double> e = identity_tube(kDct4);
  CHECK((id.realized.tube(1, 1) - e).norm() == 0.0);
  // For the orthonormal DCT, e = C^T 1 differs from the impulse (1,0,...,0).
  CHECK((e - oracle::dct_cosine(4).transpose() * Vector<double>::Ones(4)).norm() <= 1e-15);

  const T3 x = oracle::random_tensor(3, 2, 4, 7);
  CHECK(oracle::rel_diff(c_product(c_identity(3, kDct4).realized, x, kDct4), x) <= 1e-13);
  CHECK(oracle::rel_diff(c_product(x, c_identity(2, kDct4).realized, kDct4), x) <= 1e-13);
}

TEST_CASE("c-transpose: p = 1, involution, transform-domain definition") {
  const T3 a1 = oracle::random_tensor(3, 4, 1, 8);
  CHECK(Mat(c_transpose(a1, TransformSpec<double>::Dct(1)).slice(0)) == Mat(a1.slice(0).transpose()));

  const T3 a = oracle::random_tensor(3, 5, 4, 9);
  CHECK(oracle::rel_diff(c_transpose(c_transpose(a, kDct4), kDct4), a) <= 1e-13);

  // Independent route: transpose every slice of L(A) and transform back.
  const T3 h = l_transform(a, kDct4);
  T3 ht(5, 3, 4);
  for (Index k = 0; k < 4; ++k) ht.slice(k) = h.slice(k).transpose();
  CHECK(oracle::rel_diff(c_transpose(a, kDct4), l_inverse(ht, kDct4)) <= 1e-13);

  Mat z = oracle::random_matrix(4, 4, 10) + 4.0 * Mat::Identity(4, 4);
  const auto tz = TransformSpec<double>::Explicit(z);
  const T3 hz = l_transform(a, tz);
  T3 hzt(5, 3, 4);
  for (Index k = 0; k < 4; ++k) hzt.slice(k) = hz.slice(k).transpose();
  CHECK(oracle::rel_diff(c_transpose(a, tz), l_inverse(hzt, tz)) <= 1e-13);
}

TEST_CASE("(A *c B)^T = B^T *c A^T") {
  const T3 a = oracle::random_tensor(3, 4, 4, 11), b = oracle::random_tensor(4, 2, 4, 12);
  const T3 lhs = c_transpose(c_product(a, b, kDct4), kDct4);
  const T3 rhs = c_product(c_transpose(b, kDct4), c_transpose(a, kDct4), kDct4);
  CHECK(oracle::rel_diff(lhs, rhs) <= 1e-12);
}

TEST_CASE("property: associativity, distributivity, transform consistency") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Index p = 1 + static_cast<Index>(seed % 6);
    const auto t = TransformSpec<double>::Dct(p);
    const T3 a = oracle::random_tensor(3, 3, p, 3 * seed);
    const T3 b = oracle::random_tensor(3, 3, p, 3 * seed + 1);
    const T3 c = oracle::random_tensor(3, 3, p, 3 * seed + 2);
    CHECK(oracle::rel_diff(c_product(c_product(a, b, t), c, t),
                           c_product(a, c_product(b, c, t), t)) <= 1e-12);
    CHECK(oracle::rel_diff(c_product(a, T3(b + c), t), c_product(a, b, t) + c_product(a, c, t)) <=
          1e-12);
    CHECK(oracle::rel_diff(l_transform(c_product(a, b, t), t),
                           facewise_product(l_transform(a, t), l_transform(b, t))) <= 1e-13);
  }
}

TEST_CASE("is_f_orthogonal") {
  CHECK(is_f_orthogonal(c_identity(3, kDct4).realized, kDct4, 1e-12));

  T3 bad_hat(3, 3, 4);
  for (Index k = 0; k < 4; ++k) bad_hat.slice(k).setIdentity();
  bad_hat.slice(2) *= 2.0;
  CHECK_FALSE(is_f_orthogonal(l_inverse(bad_hat, kDct4), kDct4, 1e-6));

  const auto f = csvd(oracle::random_tensor(5, 5, 4, 13), kDct4);
  CHECK(is_f_orthogonal(f.u, kDct4, 1e-10));
  CHECK(is_f_orthogonal(f.v, kDct4, 1e-10));

  CHECK_THROWS_AS(is_f_orthogonal(oracle::random_tensor(3, 2, 4, 1), kDct4, 1e-10), DomainError);
}

TEST_CASE("f-orthogonal tensors are isometries on lateral-slice stacks") {
  const auto f = csvd(oracle::random_tensor(6, 6, 4, 14), kDct4);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const T3 x = oracle::random_tensor(6, 1 + seed % 3, 4, 50 + seed);
    const double nx = frobenius_norm(x);
    CHECK(std::abs(frobenius_norm(c_product(f.u, x, kDct4)) - nx) <= 1e-12 * nx);
  }
}

TEST_CASE("is_f_diagonal in both domains") {
  CHECK(is_f_diagonal(T3::Zero(3, 3, 2), 1e-12));
  CHECK(is_f_diagonal(c_identity(3, kDct4).realized, 0.0));
  CHECK(is_f_diagonal_transformed(c_identity(3, kDct4).realized, kDct4, 0.0));

  const auto f = csvd(oracle::random_tensor(6, 4, 4, 15), kDct4);
  CHECK(is_f_diagonal_transformed(f.s, kDct4, 1e-12));
  CHECK(is_f_diagonal(f.s, 1e-12));
  CHECK_FALSE(is_f_diagonal(oracle::random_tensor(3, 3, 2, 16), 1e-3));
}

TEST_CASE("c_apply and c_scale agree with the full c-product") {
  const T3 a = oracle::random_tensor(5, 3, 4, 17);
  const T3 x = oracle::random_tensor(3, 1, 4, 18);
  CHECK(oracle::rel_diff(c_apply(a, LateralSlice<double>::FromTensor(x), kDct4).to_tensor(),
                         c_product(a, x, kDct4)) <= 1e-14);
  const Tube<double> s = oracle::random_matrix(4, 1, 19);
  T3 st(1, 1, 4);
  st.set_tube(0, 0, s);
  const T3 y = oracle::random_tensor(5, 1, 4, 20);
  CHECK(oracle::rel_diff(c_scale(LateralSlice<double>::FromTensor(y), s, kDct4).to_tensor(),
                         c_product(y, st, kDct4)) <= 1e-13);
}
