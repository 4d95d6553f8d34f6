#include <doctest.h>

#include <Eigen/SVD>

#include "oracles.hpp"
#include "tlaser/compress.hpp"

using namespace tlaser;
using oracle::Mat;
using oracle::T3;

namespace {

const auto kDct2 = TransformSpec<double>::Dct(2);

// Independent TLASER: tensorize by index formula, transform with the cosine
// matrix, truncate each face with JacobiSVD and undo everything by hand.
Mat tlaser_oracle(const Mat& w, Index n_h, Index r) {
  const Index d_m = w.cols(), d_h = d_m / n_h;
  T3 t(d_h, d_m, n_h);
  for (Index h = 0; h < n_h; ++h)
    for (Index i = 0; i < d_h; ++i)
      for (Index j = 0; j < d_m; ++j) t(i, j, h) = w(h * d_h + i, j);
  const Mat c = oracle::dct_cosine(n_h);
  T3 hat = oracle::mode_product(t, c, 3);
  for (Index k = 0; k < n_h; ++k) {
    Eigen::JacobiSVD<Mat> svd(Mat(hat.slice(k)), Eigen::ComputeThinU | Eigen::ComputeThinV);
    hat.slice(k) = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() *
                   svd.matrixV().leftCols(r).transpose();
  }
  const T3 back = oracle::mode_product(hat, Mat(c.transpose()), 3);
  Mat out(d_m, d_m);
  for (Index h = 0; h < n_h; ++h)
    for (Index i = 0; i < d_h; ++i)
      for (Index j = 0; j < d_m; ++j) out(h * d_h + i, j) = back(i, j, h);
  return out;
}

}  // namespace

TEST_CASE("relative error") {
  const Mat w = oracle::random_matrix(4, 3, 1);
  CHECK(rel_error(w, w) == 0.0);
  CHECK(rel_error(w, Mat::Zero(4, 3)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rel_error(w, Mat(2.0 * w)) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rel_error(Mat::Zero(2, 2), Mat::Zero(2, 2)) == 0.0);
  CHECK_THROWS_AS(rel_error(Mat::Zero(2, 2), Mat::Ones(2, 2)), DomainError);
  CHECK_THROWS_AS(rel_error(w, Mat::Zero(3, 4)), DomainError);
}

TEST_CASE("parameter budgets") {
  CHECK(laser_params(4, 4, 1) == 9);
  CHECK(tlaser_params(2, 4, 2, 1) == 14);
  CHECK(laser_params(4096, 4096, 10) == 81930);
  CHECK(tlaser_params(256, 4096, 16, 10) == 16ull * 10 * 4353);
  CHECK(budget_matched_laser_rank(4, 4, 14) == 1);
  CHECK(budget_matched_laser_rank(4, 4, 8) == 0);
  CHECK(budget_matched_laser_rank(4, 4, 1000) == 4);
  for (Index r = 1; r <= 64; ++r) {
    const auto b = tlaser_params(8, 64, 8, r);
    const Index rl = budget_matched_laser_rank(64, 64, b);
    CHECK(laser_params(64, 64, rl) <= b);
    if (rl < 64) CHECK(laser_params(64, 64, rl + 1) > b);
  }
}

TEST_CASE("laser_matrix: Eckart-Young error and full-rank identity") {
  const Mat w = oracle::random_matrix(7, 5, 2);
  Eigen::JacobiSVD<Mat> svd(w);
  const auto& s = svd.singularValues();
  for (Index r = 1; r <= 5; ++r) {
    const Mat wr = laser_matrix(w, r);
    const double expect = std::sqrt(s.tail(5 - r).squaredNorm());
    CHECK(std::abs((w - wr).norm() - expect) <= 1e-12 * s(0));
  }
  CHECK(rel_error(w, laser_matrix(w, 5)) <= 1e-13);
  CHECK_THROWS_AS(laser_matrix(w, 0), DomainError);
  CHECK_THROWS_AS(laser_matrix(w, 6), DomainError);

  const auto res = laser_layer(w, 2, "x");
  CHECK(res.report.rank_used == 2);
  CHECK(res.report.params_retained == laser_params(7, 5, 2));
  CHECK(res.report.params_original == 35);
  CHECK(res.report.spectrum_prefix.size() == 5);
  CHECK(std::abs(res.discarded_energy - s.tail(3).squaredNorm()) <= 1e-12 * s.squaredNorm());
}

TEST_CASE("tlaser_layer matches the independent pipeline") {
  const Mat w = oracle::random_matrix(16, 16, 3);
  const auto kind = WeightKind::FromMatrixShape(WeightKindTag::Attention, 16, 16, 4);
  const auto t = TransformSpec<double>::Dct(4);
  for (Index r = 1; r <= 4; ++r) {
    const auto res = tlaser_layer(w, kind, RankPolicy::Fixed(r), t);
    CHECK(oracle::rel_diff(res.weight, tlaser_oracle(w, 4, r)) <= 1e-12);
  }
}

TEST_CASE("tlaser full rank reproduces the weight") {
  const Mat w = oracle::random_matrix(24, 24, 4);
  const auto kind = WeightKind::FromMatrixShape(WeightKindTag::Attention, 24, 24, 3);
  const auto res = tlaser_layer(w, kind, RankPolicy::Fixed(8), TransformSpec<double>::Dct(3));
  CHECK(res.report.rel_error <= 1e-11);
  CHECK(res.report.rank_used == 8);

  const auto clamped =
      tlaser_layer(w, kind, RankPolicy::Fixed(50), TransformSpec<double>::Dct(3));
  CHECK(clamped.report.rank_used == 8);
  CHECK_FALSE(clamped.report.notes.empty());
}

TEST_CASE("replicated head blocks: error equals the single-block truncation error") {
  // Every head block equals B, so the transformed tensor has one non-zero face
  // sqrt(p) B and truncation to rank r acts on B alone.
  const Index d_h = 4, d_m = 16, n_h = 4;
  const Mat b = oracle::random_matrix(d_h, d_m, 5);
  Mat w(d_m, d_m);
  for (Index h = 0; h < n_h; ++h) w.middleRows(h * d_h, d_h) = b;
  const auto kind = WeightKind::FromMatrixShape(WeightKindTag::Attention, d_m, d_m, n_h);
  for (Index r = 1; r <= d_h; ++r) {
    const auto res =
        tlaser_layer(w, kind, RankPolicy::Fixed(r), TransformSpec<double>::Dct(n_h));
    const double expect = (r < d_h) ? rel_error(b, laser_matrix(b, r)) : 0.0;
    CHECK(std::abs(res.report.rel_error - expect) <= 1e-12);
  }
}

TEST_CASE("energy identity: squared error equals discarded transform-domain energy") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Index n_h = 2 + static_cast<Index>(seed % 3);
    const Index d_m = n_h * (2 + static_cast<Index>(seed % 3));
    const Mat w = oracle::random_matrix(d_m, d_m, 10 + seed);
    const auto kind = WeightKind::FromMatrixShape(WeightKindTag::Attention, d_m, d_m, n_h);
    const auto t = TransformSpec<double>::Dct(n_h);
    double prev = std::numeric_limits<double>::infinity();
    for (Index r = 1; r <= kind.d_h(); ++r) {
      const auto res = tlaser_layer(w, kind, RankPolicy::Fixed(r), t);
      const double err2 = (w - res.weight).squaredNorm();
      CHECK(std::abs(err2 - res.discarded_energy) <= 1e-9 * w.squaredNorm());
      CHECK(res.report.rel_error <= prev * (1 + 1e-12));
      prev = res.report.rel_error;
    }
  }
}

TEST_CASE("FFN kinds compress and keep their shape") {
  const Mat u_in = oracle::random_matrix(12, 4, 6);
  const auto k_in = WeightKind::FromMatrixShape(WeightKindTag::FfnIn, 12, 4, 3);
  const auto r_in = tlaser_layer(u_in, k_in, RankPolicy::Fixed(2), TransformSpec<double>::Dct(3));
  CHECK(r_in.weight.rows() == 12);
  CHECK(r_in.weight.cols() == 4);
  CHECK(r_in.report.params_retained == tlaser_params(4, 4, 3, 2));

  const Mat u_out = oracle::random_matrix(4, 12, 7);
  const auto k_out = WeightKind::FromMatrixShape(WeightKindTag::FfnOut, 4, 12, 3);
  const auto r_out =
      tlaser_layer(u_out, k_out, RankPolicy::Energy(0.999), TransformSpec<double>::Dct(3));
  CHECK(r_out.weight.cols() == 12);
  CHECK(r_out.report.rank_used >= 1);
  CHECK(r_out.report.rank_used <= 4);

  CHECK_THROWS_AS(tlaser_layer(u_in, k_out, RankPolicy::Fixed(1), TransformSpec<double>::Dct(3)),
                  DomainError);
}

TEST_CASE("over-budget flag") {
  // A 4x4 weight with two heads at rank 2 keeps 2 * 2 * 7 = 28 > 16 entries.
  const Mat w = oracle::random_matrix(4, 4, 8);
  const auto kind = WeightKind::FromMatrixShape(WeightKindTag::Attention, 4, 4, 2);
  const auto res = tlaser_layer(w, kind, RankPolicy::Fixed(2), kDct2);
  CHECK(res.report.params_retained == 28);
  CHECK(res.report.over_budget);
}

TEST_CASE("compare_methods") {
  const Mat w = oracle::random_matrix(4, 4, 9);
  const auto kind = WeightKind::FromMatrixShape(WeightKindTag::Attention, 4, 4, 2);
  const auto cmp = compare_methods(w, kind, 1, kDct2);
  CHECK(cmp.tlaser.params_retained == 14);
  CHECK(cmp.laser.rank_used == 1);
  CHECK(cmp.laser.params_retained == 9);
  CHECK_FALSE(cmp.laser.over_budget);

  const auto ratio = compare_methods(w, kind, 1, kDct2, ComparisonMode::EqualRatio);
  CHECK(ratio.laser.rank_used == 2);

  const Mat big = oracle::random_matrix(64, 64, 10);
  const auto k8 = WeightKind::FromMatrixShape(WeightKindTag::Attention, 64, 64, 8);
  const auto c8 = compare_methods(big, k8, 3, TransformSpec<double>::Dct(8));
  CHECK(c8.laser.params_retained <= c8.tlaser.params_retained);
  CHECK(c8.laser.rank_used == budget_matched_laser_rank(64, 64, c8.tlaser.params_retained));

  CHECK_THROWS_AS(compare_methods(w, kind, 3, kDct2), DomainError);
  CHECK_THROWS_AS(compare_methods(w, kind, 0, kDct2), DomainError);
}
