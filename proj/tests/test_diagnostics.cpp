#include <cmath>
#include <sstream>

#include "doctest.h"
#include "ssn/diagnostics.hpp"
#include "ssn/linalg.hpp"
#include "ssn/rng.hpp"
#include "ssn/sketch.hpp"

using namespace ssn;

namespace {

Matrix random_spd(Eigen::Index p, std::uint64_t seed) {
  CounterRng r(seed);
  Matrix g(p, p + 3);
  for (auto& v : g.reshaped()) v = r.normal();
  return g * g.transpose() / static_cast<double>(p) + 0.1 * Matrix::Identity(p, p);
}

QuadraticObjective random_quadratic(Eigen::Index p, std::uint64_t seed) {
  CounterRng r(seed + 1);
  Vector b(p);
  for (auto& v : b) v = r.normal();
  return QuadraticObjective::from_matrix(random_spd(p, seed), b);
}

}  // namespace

TEST_CASE("doubly exponential decay is quadratic") {
  std::vector<double> g;
  for (int t = 0; t < 6; ++t) g.push_back(std::pow(2.0, -std::pow(2.0, t)));
  const auto rep = classify(g, 4);
  CHECK(rep.classification == ConvergenceClass::quadratic);
  for (double q : rep.quadratic) CHECK(q == doctest::Approx(1.0));
}

TEST_CASE("geometric decay is linear") {
  std::vector<double> g;
  for (int t = 0; t < 10; ++t) g.push_back(std::pow(0.5, t));
  const auto rep = classify(g, 4);
  CHECK(rep.classification == ConvergenceClass::linear);
  for (double r : rep.rho) CHECK(r == doctest::Approx(0.5));
}

TEST_CASE("inverse factorial decay is superlinear") {
  std::vector<double> g;
  double f = 1.0;
  for (int t = 1; t <= 12; ++t) {
    f *= t;
    g.push_back(1.0 / f);
  }
  CHECK(classify(g, 4).classification == ConvergenceClass::superlinear);
}

TEST_CASE("classification is scale free") {
  std::vector<double> g, scaled;
  double f = 1.0;
  for (int t = 1; t <= 12; ++t) {
    f *= t;
    g.push_back(1.0 / f);
    scaled.push_back(1e7 / f);
  }
  CHECK(classify(g, 4).classification == classify(scaled, 4).classification);
}

TEST_CASE("irregular sequences are inconclusive") {
  const std::vector<double> g{1.0, 0.5, 0.4, 0.1, 0.09, 0.01, 0.009};
  CHECK(classify(g, 4).classification == ConvergenceClass::inconclusive);
}

TEST_CASE("too few usable norms") {
  const std::vector<double> g{1.0, 0.5, 0.25};
  CHECK_THROWS_AS(classify(g, 4), InsufficientDataError);
  // Norms at round-off level relative to g0 are not usable.
  const std::vector<double> tiny{1.0, 0.5, 0.25, 1e-20, 1e-30, 1e-40};
  CHECK_THROWS_AS(classify(tiny, 3), InsufficientDataError);
  CHECK(classify_trace(std::vector<IterationRecord>(2)).classification == ConvergenceClass::inconclusive);
}

TEST_CASE("classify reads grad norms from records") {
  std::vector<IterationRecord> recs;
  for (int t = 0; t < 8; ++t) recs.push_back({.t = static_cast<std::size_t>(t), .grad_norm = std::pow(0.3, t)});
  CHECK(classify(recs, 4).classification == ConvergenceClass::linear);
  CHECK(classify_trace(recs).classification == ConvergenceClass::linear);
  CHECK(classify_trace(recs).window == 4);
}

TEST_CASE("gamma is zero for the exact Hessian") {
  const Matrix a = random_spd(8, 1);
  CHECK(measure_gamma(a, a) <= 1e-10);
}

TEST_CASE("gamma of a scaled Hessian is epsilon") {
  const Matrix a = random_spd(8, 2);
  for (double eps : {0.1, 0.3, 0.5}) CHECK(measure_gamma(a, a / (1 - eps)) == doctest::Approx(eps).epsilon(1e-9));
}

TEST_CASE("gamma matches the dense spectral norm") {
  const Matrix a = random_spd(10, 3);
  const Matrix h = random_spd(10, 4);
  const Matrix e = (a - h) * h.inverse();
  Eigen::JacobiSVD<Matrix> svd(e);
  CHECK(measure_gamma(a, h) == doctest::Approx(svd.singularValues()[0]).epsilon(1e-6));
}

TEST_CASE("gamma vanishes only at the exact Hessian") {
  const QuadraticObjective q = random_quadratic(6, 5);
  const Vector x = Vector::Zero(6);
  const Matrix a = q.explicit_hessian(x);
  CHECK(measure_gamma(q, x, a) <= 1e-9);
  CounterRng r(6);
  for (int k = 0; k < 10; ++k) {
    Matrix d = Matrix::Zero(6, 6);
    const auto i = static_cast<Eigen::Index>(r.uniform_index(6));
    d(i, i) = 1e-3;
    CHECK(measure_gamma(q, x, a + d) > 1e-9);
  }
}

TEST_CASE("gamma from formula-sized samples") {
  const RidgeLogistic obj(synth_logistic(3000, 5, 3.0, 7), 0.1);
  const Vector x = Vector::Zero(5);
  const double k = obj.curvature_bound(), sigma = obj.strong_convexity_floor();
  const std::size_t s = sample_size_subnewton(k, sigma, 5, 0.1, 0.5);
  const Matrix a = obj.explicit_hessian(x);
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CounterRng r(seed);
    ok += measure_gamma(a, obj.sub_hessian(x, r.sample_with_replacement(3000, s))) <= 1.0;
  }
  CHECK(ok >= 18);
}

TEST_CASE("embedding accuracy") {
  const Matrix a = random_spd(6, 8);
  CHECK(embedding_accuracy(a, a) <= 1e-12);
  CHECK(embedding_accuracy(a, a / 0.7) == doctest::Approx(0.3).epsilon(1e-10));
  CHECK(embedding_accuracy(a, a / 1.2) == doctest::Approx(0.2).epsilon(1e-10));
}

TEST_CASE("residual check") {
  const QuadraticObjective q = random_quadratic(7, 9);
  CounterRng r(10);
  Vector x(7);
  for (auto& v : x) v = r.normal();
  const Vector g = q.gradient(x);
  const Vector newton = spd_factor(q.explicit_hessian(x)).solve(g);
  CHECK(residual_check(q, x, newton, g) <= 1e-10 * g.norm());
  CHECK(residual_check(q, x, Vector::Zero(7), g) == doctest::Approx(g.norm()));
}

TEST_CASE("trace csv round trip") {
  std::vector<IterationRecord> recs{
      {.t = 0, .f = 0.6931471805599453, .grad_norm = 0.1, .inner_iters = 3, .residual_norm = 1e-3, .wall_seconds = 0.25, .gamma_estimate = 0.4},
      {.t = 1, .f = 0.5, .grad_norm = 1.0 / 3.0, .inner_iters = 0, .wall_seconds = 0.5},
  };
  const std::string csv = trace_csv_string(recs);
  CHECK(csv.rfind(std::string(kTraceCsvHeader) + "\n", 0) == 0);
  CHECK(csv.find("\n1,0.5,0.33333333333333331,0,,0.5,\n") != std::string::npos);
  std::istringstream in(csv);
  const auto back = read_trace_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0].f == recs[0].f);
  CHECK(back[0].residual_norm == recs[0].residual_norm);
  CHECK(back[0].gamma_estimate == recs[0].gamma_estimate);
  CHECK(back[1].grad_norm == recs[1].grad_norm);
  CHECK_FALSE(back[1].residual_norm.has_value());
  CHECK(trace_csv_string(back) == csv);
}
