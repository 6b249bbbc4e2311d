#include <cmath>
#include <numeric>

#include "doctest.h"
#include "ssn/rng.hpp"
#include "ssn/sketch.hpp"

using namespace ssn;

namespace {

Matrix gaussian_matrix(Eigen::Index m, Eigen::Index d, std::uint64_t seed) {
  CounterRng r(seed);
  Matrix b(m, d);
  for (auto& v : b.reshaped()) v = r.normal();
  return b;
}

// Fraction of random unit x with ‖SBx‖² ∈ (1±ε)‖Bx‖².
double embedding_hit_rate(const RealizedSketch& sk, const Matrix& b, double eps, std::uint64_t seed) {
  const Matrix sb = sk.apply(b);
  CounterRng r(seed);
  int hits = 0;
  for (int k = 0; k < 100; ++k) {
    Vector x(b.cols());
    for (auto& v : x) v = r.normal();
    x.normalize();
    const double ratio = (sb * x).squaredNorm() / (b * x).squaredNorm();
    hits += ratio > 1 - eps && ratio < 1 + eps;
  }
  return hits / 100.0;
}

}  // namespace

TEST_CASE("sparse embedding has one signed entry per column") {
  const RealizedSketch sk = realize({SketchKind::sparse_embed, 4, 1}, 10);
  REQUIRE(sk.buckets().size() == 10);
  for (std::size_t j = 0; j < 10; ++j) {
    CHECK(sk.buckets()[j] < 4);
    CHECK((sk.signs()[j] == 1 || sk.signs()[j] == -1));
  }
  const Matrix s = sk.to_dense();
  CHECK(s.rows() == 4);
  for (Eigen::Index j = 0; j < 10; ++j) {
    CHECK((s.col(j).array() != 0).count() == 1);
    CHECK(s.col(j).cwiseAbs().sum() == 1.0);
  }
}

TEST_CASE("uniform rows with s = m have unit scales") {
  const RealizedSketch sk = realize({SketchKind::uniform_rows, 3, 9}, 3);
  REQUIRE(sk.sampled_rows().size() == 3);
  for (const auto& row : sk.sampled_rows()) CHECK(row.scale == doctest::Approx(1.0).epsilon(1e-15));
  const double total = std::accumulate(sk.probabilities().begin(), sk.probabilities().end(), 0.0);
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("gaussian entries have variance 1/s") {
  const RealizedSketch sk = realize({SketchKind::gaussian, 1000, 5}, 50);
  const Matrix& s = sk.dense();
  REQUIRE(s.rows() == 1000);
  REQUIRE(s.cols() == 50);
  const double mean = s.mean();
  const double var = (s.array() - mean).square().sum() / static_cast<double>(s.size() - 1);
  CHECK(std::abs(var - 1e-3) <= 0.05e-3);
}

TEST_CASE("leverage kind needs scores") {
  CHECK_THROWS_AS(realize({SketchKind::leverage_rows, 5, 0}, 10), std::invalid_argument);
  CHECK_THROWS(realize({SketchKind::gaussian, 0, 0}, 10));
}

TEST_CASE("identity sketch and zero input") {
  const Matrix b = gaussian_matrix(12, 3, 2);
  const RealizedSketch id = identity_sketch(12);
  const Matrix sb = id.apply(b);
  CHECK(((sb.transpose() * sb) - b.transpose() * b).norm() <= 1e-13 * (b.transpose() * b).norm());
  for (auto kind : {SketchKind::gaussian, SketchKind::uniform_rows, SketchKind::sparse_embed}) {
    const RealizedSketch sk = realize({kind, 5, 3}, 12);
    CHECK(sk.apply(Matrix::Zero(12, 3)) == Matrix::Zero(5, 3));
  }
  CHECK_THROWS_AS(id.apply(Matrix::Zero(11, 3)), DimensionError);
}

TEST_CASE("apply agrees with the dense operator") {
  const Matrix b = gaussian_matrix(30, 4, 3);
  std::vector<double> scores(30, 1.0 / 30);
  for (auto kind : {SketchKind::gaussian, SketchKind::uniform_rows, SketchKind::sparse_embed, SketchKind::leverage_rows}) {
    const RealizedSketch sk = realize_with_scores({kind, 7, 4, 0.5}, scores);
    CHECK((sk.apply(b) - sk.to_dense() * b).norm() <= 1e-13 * b.norm());
  }
}

TEST_CASE("gaussian sketch with s = 2000 is a 0.1-embedding") {
  const Matrix b = gaussian_matrix(100, 5, 4);
  CHECK(embedding_hit_rate(realize({SketchKind::gaussian, 2000, 6}, 100), b, 0.1, 7) >= 0.95);
}

TEST_CASE("embedding property at epsilon 0.3 on a 200 x 8 factor") {
  const Matrix b = gaussian_matrix(200, 8, 5);
  const double eps = 0.3;
  const std::size_t s_gauss = embedding_dim(SketchKind::gaussian, 8, eps, 4.0);
  CHECK(s_gauss == 356);
  CHECK(embedding_hit_rate(realize({SketchKind::gaussian, s_gauss, 8}, 200), b, eps, 9) >= 0.95);

  const std::size_t s_lev = embedding_dim(SketchKind::leverage_rows, 8, eps, 4.0);
  CHECK(s_lev == static_cast<std::size_t>(std::ceil(4 * 8 * std::log(8.0) / 0.09)));
  const auto scores = leverage_scores(b);
  CHECK(embedding_hit_rate(realize_with_scores({SketchKind::leverage_rows, s_lev, 10}, scores), b, eps, 11) >= 0.95);
}

TEST_CASE("sparse embedding touches each nonzero once") {
  Matrix b = gaussian_matrix(40, 6, 6);
  CounterRng r(12);
  for (auto& v : b.reshaped())
    if (r.uniform() < 0.5) v = 0.0;
  SketchApplyStats stats;
  realize({SketchKind::sparse_embed, 10, 2}, 40).apply(b, &stats);
  CHECK(stats.entries_touched == static_cast<std::size_t>((b.array() != 0).count()));
}

TEST_CASE("leverage sampling follows the scores") {
  Matrix b = gaussian_matrix(10, 3, 13);
  b.row(2) *= 6.0;  // make one row dominant
  const auto scores = leverage_scores(b);
  const std::size_t draws = 100000;
  const RealizedSketch sk = realize_with_scores({SketchKind::leverage_rows, draws, 14, 1.0}, scores);
  std::vector<double> counts(10, 0.0);
  for (const auto& row : sk.sampled_rows()) counts[row.row] += 1;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(sk.probabilities()[i] == doctest::Approx(scores[i]).epsilon(1e-14));
    const double e = scores[i] * draws;
    chi2 += (counts[i] - e) * (counts[i] - e) / e;
  }
  // 9 degrees of freedom, p = 0.001 quantile
  CHECK(chi2 < 27.877);
}

TEST_CASE("leverage mixing") {
  const Matrix b = gaussian_matrix(20, 2, 15);
  const auto scores = leverage_scores(b);
  const RealizedSketch sk = realize_with_scores({SketchKind::leverage_rows, 10, 1, 0.25}, scores);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(sk.probabilities()[i] == doctest::Approx(0.25 * scores[i] + 0.75 / 20));
    CHECK(sk.probabilities()[i] >= 0.25 * scores[i]);
  }
  for (const auto& row : sk.sampled_rows())
    CHECK(row.scale == doctest::Approx(1.0 / std::sqrt(sk.probabilities()[row.row] * 10)));
}

TEST_CASE("realize is deterministic") {
  for (auto kind : {SketchKind::gaussian, SketchKind::uniform_rows, SketchKind::sparse_embed}) {
    const SketchSpec spec{kind, 6, 77};
    CHECK(realize(spec, 25).to_dense() == realize(spec, 25).to_dense());
    CHECK(realize(spec, 25).to_dense() != realize({kind, 6, 78}, 25).to_dense());
  }
}

TEST_CASE("leverage scores of identity columns") {
  Matrix b = Matrix::Identity(10, 10).leftCols(4);
  const auto l = leverage_scores(b);
  for (std::size_t i = 0; i < 10; ++i) CHECK(l[i] == doctest::Approx(i < 4 ? 0.25 : 0.0));
  CHECK(std::accumulate(l.begin(), l.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(coherence(b) == doctest::Approx(10.0 / 4.0));
  CHECK(coherence(SparseMatrix::from_dense(b)) == doctest::Approx(10.0 / 4.0));
}

TEST_CASE("leverage scores ignore column scaling") {
  const Matrix b = gaussian_matrix(30, 4, 16);
  const Vector d = (Vector(4) << 0.01, 3.0, 1e3, 0.5).finished();
  const auto l0 = leverage_scores(b);
  const auto l1 = leverage_scores(Matrix(b * d.asDiagonal()));
  for (std::size_t i = 0; i < 30; ++i) CHECK(l1[i] == doctest::Approx(l0[i]).epsilon(1e-10));
}

TEST_CASE("random leverage scores sum to one") {
  const auto l = leverage_scores(gaussian_matrix(50, 5, 17));
  CHECK(std::abs(std::accumulate(l.begin(), l.end(), 0.0) - 1.0) <= 1e-12);
  for (double v : l) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0 / 5 + 1e-15);
  }
}

TEST_CASE("rank-deficient factor is rejected") {
  Matrix b = gaussian_matrix(20, 3, 18);
  b.col(2) = b.col(0) - 2 * b.col(1);
  CHECK_THROWS_AS(leverage_scores(b), RankError);
  CHECK_THROWS_AS(leverage_scores(gaussian_matrix(2, 3, 1)), RankError);
}

TEST_CASE("coherence examples") {
  Matrix stacked(12, 3);
  stacked << Matrix::Identity(3, 3), Matrix::Identity(3, 3), Matrix::Identity(3, 3), Matrix::Identity(3, 3);
  CHECK(coherence(stacked) == doctest::Approx(1.0));
  const double mu = coherence(gaussian_matrix(200, 5, 19));
  CHECK(mu >= 1.0);
  CHECK(mu <= 40.0);
  CHECK(mu < 5.0);
}

TEST_CASE("sample size formulas") {
  CHECK(sample_size_subnewton(1, 1, 2, 4 / std::exp(1.0), 1) == 16);
  CHECK(sample_size_subnewton(2, 1, 2, 4 / std::exp(1.0), 1) == 64);
  CHECK(sample_size_subnewton(1, 0.1, 100, 0.1, 0.5) == 48646);
  CHECK(sample_size_coherent(1, std::exp(1.0), 1, 1, 1) == 3);
  CHECK(sample_size_coherent(2, std::exp(1.0), 1, 1, 1) == 6);
  // ⌈16·3·20·log(400)/0.25⌉ evaluates to 23008.
  CHECK(sample_size_coherent(3, 20, 0.05, 0.5, 16) == 23008);
  CHECK(sample_size_gradient(10, 0.5) == 400);
  CHECK(sample_size_gradient(0, 0.5) == 1);
}

TEST_CASE("embedding dimensions") {
  CHECK(embedding_dim(SketchKind::gaussian, 10, 0.5, 4) == 160);
  CHECK(embedding_dim(SketchKind::sparse_embed, 10, 0.5, 1) == 400);
  CHECK(embedding_dim(SketchKind::uniform_rows, 1, 0.5, 4) == 16);
  CHECK(ceil_count(16.0 * (1 + 1e-15)) == 16);
  CHECK(ceil_count(16.001) == 17);
}

TEST_CASE("kind names round-trip") {
  for (auto kind : {SketchKind::gaussian, SketchKind::uniform_rows, SketchKind::leverage_rows, SketchKind::sparse_embed})
    CHECK(sketch_kind_from_string(to_string(kind)) == kind);
  CHECK_FALSE(sketch_kind_from_string("srht").has_value());
}
