#include "ssn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssn/linalg.hpp"
#include "ssn/rng.hpp"

namespace ssn {

std::string to_string(ConvergenceClass c) {
  switch (c) {
    case ConvergenceClass::linear: return "linear";
    case ConvergenceClass::superlinear: return "superlinear";
    case ConvergenceClass::quadratic: return "quadratic";
    case ConvergenceClass::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Ratios over consecutive usable pairs.
void usable_ratios(std::span<const double> g, std::vector<double>& rho, std::vector<double>& q) {
  rho.clear();
  q.clear();
  if (g.empty() || !(g[0] > 0.0)) return;
  const double floor = 100.0 * std::numeric_limits<double>::epsilon() * g[0];
  for (std::size_t t = 0; t + 1 < g.size(); ++t) {
    if (!(g[t] > floor) || !(g[t + 1] > floor)) continue;
    rho.push_back(g[t + 1] / g[t]);
    q.push_back(g[t + 1] / (g[t] * g[t]));
  }
}

std::vector<double> norms_of(std::span<const IterationRecord> records) {
  std::vector<double> g;
  g.reserve(records.size());
  for (const auto& r : records) g.push_back(r.grad_norm);
  return g;
}

}  // namespace

ConvergenceReport classify(std::span<const double> grad_norms, std::size_t window) {
  if (window < 1) throw std::invalid_argument("classify: window must be >= 1");
  ConvergenceReport rep;
  usable_ratios(grad_norms, rep.rho, rep.quadratic);
  if (rep.rho.size() < window)
    throw InsufficientDataError("classify: need " + std::to_string(window + 1) + " usable gradient norms, have " +
                                std::to_string(rep.rho.empty() ? 0 : rep.rho.size() + 1));
  rep.window = window;

  const std::vector<double> rho(rep.rho.end() - static_cast<std::ptrdiff_t>(window), rep.rho.end());
  const std::vector<double> q(rep.quadratic.end() - static_cast<std::ptrdiff_t>(window), rep.quadratic.end());
  const double last_rho = rho.back();

  const double q_med = median(q);
  const bool q_bounded = *std::max_element(q.begin(), q.end()) <= 10.0 * q_med;
  if (q_bounded && last_rho < 1e-2) {
    rep.classification = ConvergenceClass::quadratic;
    return rep;
  }

  bool decreasing = window >= 2;
  for (std::size_t k = 1; k < rho.size(); ++k) decreasing = decreasing && rho[k] < rho[k - 1];
  if (decreasing && last_rho < 0.1) {
    rep.classification = ConvergenceClass::superlinear;
    return rep;
  }

  const double rho_med = median(rho);
  bool steady = rho_med < 1.0;
  for (double r : rho) steady = steady && std::abs(r - rho_med) <= 0.2 * rho_med;
  rep.classification = steady ? ConvergenceClass::linear : ConvergenceClass::inconclusive;
  return rep;
}

ConvergenceReport classify(std::span<const IterationRecord> records, std::size_t window) {
  const auto g = norms_of(records);
  return classify(std::span<const double>(g), window);
}

ConvergenceReport classify_trace(std::span<const IterationRecord> records) {
  const auto g = norms_of(records);
  std::vector<double> rho, q;
  usable_ratios(g, rho, q);
  if (rho.size() < 2) {
    ConvergenceReport rep;
    rep.rho = std::move(rho);
    rep.quadratic = std::move(q);
    return rep;
  }
  return classify(std::span<const double>(g), std::min<std::size_t>(4, rho.size()));
}

double measure_gamma(const Matrix& exact_hessian, const Matrix& surrogate, std::uint64_t seed) {
  if (exact_hessian.rows() != surrogate.rows() || exact_hessian.cols() != surrogate.cols() ||
      surrogate.rows() != surrogate.cols())
    throw DimensionError("measure_gamma: shape mismatch");
  const SpdFactor hf = spd_factor(surrogate);
  const Matrix diff = exact_hessian - surrogate;
  // M = (A − H)H⁻¹, Mᵀ = H⁻¹(A − H) since both are symmetric.
  auto apply_m = [&](const Vector& v) -> Vector { return diff * hf.solve(v); };
  auto apply_mt = [&](const Vector& u) -> Vector { return hf.solve(diff * u); };

  CounterRng rng(seed);
  const Eigen::Index p = surrogate.rows();
  double best = 0.0;
  for (int start = 0; start < 2; ++start) {
    CounterRng stream = rng.split(static_cast<std::uint64_t>(start));
    Vector v(p);
    for (Eigen::Index i = 0; i < p; ++i) v[i] = stream.normal();
    v.normalize();
    for (int it = 0; it < 100; ++it) {
      const Vector mv = apply_m(v);
      best = std::max(best, mv.norm());
      Vector next = apply_mt(mv);
      const double nn = next.norm();
      if (!(nn > 0.0)) break;
      v = next / nn;
    }
    best = std::max(best, apply_m(v).norm());
  }
  return best;
}

double measure_gamma(const Objective& obj, const Vector& x, const Matrix& surrogate, std::uint64_t seed) {
  return measure_gamma(obj.explicit_hessian(x), surrogate, seed);
}

double embedding_accuracy(const Matrix& exact_hessian, const Matrix& surrogate) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(exact_hessian, surrogate, Eigen::EigenvaluesOnly);
  if (ges.info() != Eigen::Success) throw NotSpdError("embedding_accuracy: surrogate is not positive definite");
  const Vector& ev = ges.eigenvalues();
  return std::max(std::abs(ev.maxCoeff() - 1.0), std::abs(ev.minCoeff() - 1.0));
}

double residual_check(const Objective& obj, const Vector& x, const Vector& p, const Vector& grad) {
  return (obj.hessian_vec(x, p) - grad).norm();
}

}  // namespace ssn
