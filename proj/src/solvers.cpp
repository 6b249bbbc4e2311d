#include "ssn/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ssn/diagnostics.hpp"

namespace ssn {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::exact_newton: return "exact_newton";
    case Strategy::sub_newton: return "sub_newton";
    case Strategy::sketch_newton: return "sketch_newton";
    case Strategy::re_sub_newton: return "re_sub_newton";
    case Strategy::re_sketch_newton: return "re_sketch_newton";
    case Strategy::pcg_newton: return "pcg_newton";
    case Strategy::newsamp: return "newsamp";
    case Strategy::reg_sub_newton: return "reg_sub_newton";
    case Strategy::sub_hess_grad: return "sub_hess_grad";
    case Strategy::sncg: return "sncg";
  }
  return "unknown";
}

std::optional<Strategy> strategy_from_string(const std::string& name) {
  static const std::pair<const char*, Strategy> table[] = {
      {"exact", Strategy::exact_newton},       {"exact_newton", Strategy::exact_newton},
      {"sub", Strategy::sub_newton},           {"sub_newton", Strategy::sub_newton},
      {"sketch", Strategy::sketch_newton},     {"sketch_newton", Strategy::sketch_newton},
      {"resub", Strategy::re_sub_newton},      {"re_sub_newton", Strategy::re_sub_newton},
      {"resketch", Strategy::re_sketch_newton}, {"re_sketch_newton", Strategy::re_sketch_newton},
      {"pcg", Strategy::pcg_newton},           {"pcg_newton", Strategy::pcg_newton},
      {"newsamp", Strategy::newsamp},          {"regsub", Strategy::reg_sub_newton},
      {"reg_sub_newton", Strategy::reg_sub_newton}, {"subgrad", Strategy::sub_hess_grad},
      {"sub_hess_grad", Strategy::sub_hess_grad}, {"sncg", Strategy::sncg},
  };
  for (const auto& [key, value] : table)
    if (name == key) return value;
  return std::nullopt;
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::gtol_reached: return "gtol_reached";
    case Termination::max_outer: return "max_outer";
    case Termination::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

double TolSchedule::operator()(double grad_norm) const {
  switch (kind) {
    case Kind::constant: return c;
    case Kind::paper: return std::min(c, std::sqrt(grad_norm)) * grad_norm;
    case Kind::quadratic: return c * grad_norm * grad_norm;
  }
  return c;
}

std::size_t SampleSize::resolve(std::size_t n) const {
  if (fraction) return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(value * static_cast<double>(n))));
  return static_cast<std::size_t>(value);
}

namespace {

bool is_sampled_hessian_strategy(Strategy s) {
  return s != Strategy::exact_newton && s != Strategy::sketch_newton && s != Strategy::re_sketch_newton;
}

bool is_refined(Strategy s) { return s == Strategy::re_sub_newton || s == Strategy::re_sketch_newton; }

}  // namespace

void SolverConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("SolverConfig: ") + what);
  };
  require(gtol >= 0.0, "gtol must be >= 0");
  require(tol.c > 0.0 && std::isfinite(tol.c), "tol schedule constant must be positive");
  if (is_sampled_hessian_strategy(strategy) || (strategy == Strategy::pcg_newton && !pcg_sketch)) {
    if (sample.fraction)
      require(sample.value > 0.0 && sample.value <= 1.0, "sample fraction must lie in (0, 1]");
    else
      require(sample.value >= 1.0 && sample.value == std::floor(sample.value), "sample count must be a positive integer");
  }
  if (strategy == Strategy::sketch_newton || strategy == Strategy::re_sketch_newton ||
      (strategy == Strategy::pcg_newton && pcg_sketch)) {
    require(!sketch_dim || *sketch_dim >= 1, "sketch_dim must be >= 1");
    require(!sketch_const || *sketch_const > 0.0, "sketch_const must be positive");
    require(sketch_beta > 0.0 && sketch_beta <= 1.0, "sketch_beta must lie in (0, 1]");
  }
  if (is_refined(strategy) || strategy == Strategy::pcg_newton || strategy == Strategy::sketch_newton ||
      strategy == Strategy::sub_newton)
    require(epsilon > 0.0 && epsilon < 1.0, "epsilon must lie in (0, 1)");
  if (strategy == Strategy::sncg || (is_refined(strategy) && warmup_iters > 0))
    require(cg_eps0 > 0.0 && cg_eps0 < 1.0, "cg_eps0 must lie in (0, 1)");
  if (strategy == Strategy::sub_hess_grad) {
    if (grad_sample.fraction)
      require(grad_sample.value > 0.0 && grad_sample.value <= 1.0, "grad_sample fraction must lie in (0, 1]");
    else
      require(grad_sample.value >= 1.0, "grad_sample count must be >= 1");
  }
  if (strategy == Strategy::newsamp) require(newsamp_eta > 0.0, "newsamp_eta must be positive");
  if (strategy == Strategy::reg_sub_newton) require(reg_alpha >= 0.0, "reg_alpha must be >= 0");
  require(!inner_max || *inner_max >= 1, "inner_max must be >= 1");
}

IndexList draw_sample(std::size_t n, std::size_t size, Sampling sampling, CounterRng stream) {
  if (n == 0) throw std::invalid_argument("draw_sample: objective has no terms");
  if (sampling == Sampling::exhaustive) {
    IndexList all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  if (size == 0) throw std::invalid_argument("draw_sample: sample size must be >= 1");
  return stream.sample_with_replacement(n, size);
}

Matrix sampled_hessian(const DirectionContext& ctx, std::uint64_t purpose) {
  const auto sample = draw_sample(ctx.obj.n_terms(), ctx.cfg.sample.resolve(ctx.obj.n_terms()), ctx.cfg.sampling,
                                  ctx.stream.split(purpose));
  return ctx.obj.sub_hessian(ctx.x, sample);
}

std::size_t sketch_target_dim(const Objective& obj, const SolverConfig& cfg) {
  if (cfg.sketch_dim) return *cfg.sketch_dim;
  double eps = cfg.epsilon;
  if (cfg.sketch_scaled_accuracy) eps *= obj.strong_convexity_floor() / obj.curvature_bound();
  const double c = cfg.sketch_const.value_or(cfg.sketch_kind == SketchKind::sparse_embed ? 1.0 : 4.0);
  return embedding_dim(cfg.sketch_kind, obj.dim(), eps, c);
}

Matrix sketched_hessian(const DirectionContext& ctx, std::uint64_t purpose) {
  const Matrix b = ctx.obj.factor_rows(ctx.x, ctx.obj.all_terms());
  Matrix sb;
  if (ctx.cfg.sampling == Sampling::exhaustive) {
    sb = identity_sketch(static_cast<std::size_t>(b.rows())).apply(b);
  } else {
    CounterRng s = ctx.stream.split(purpose);
    SketchSpec spec{ctx.cfg.sketch_kind, sketch_target_dim(ctx.obj, ctx.cfg), s.next_u64(), ctx.cfg.sketch_beta};
    if (spec.kind == SketchKind::leverage_rows) {
      const auto scores = leverage_scores(b);
      sb = realize_with_scores(spec, scores).apply(b);
    } else {
      sb = realize(spec, static_cast<std::size_t>(b.rows())).apply(b);
    }
  }
  Matrix h = sb.transpose() * sb;
  h.diagonal().array() += ctx.obj.ridge();
  return h;
}

std::size_t refine_iteration_bound(double k_hat, double sigma_hat, double grad_norm, double tol, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("refine_iteration_bound: epsilon must lie in (0,1)");
  const double arg = k_hat * grad_norm / (sigma_hat * tol);
  if (!(arg > 1.0)) return 0;
  return ceil_count(std::log(arg) / std::log(1.0 / epsilon));
}

std::size_t default_inner_max(const Objective& obj, const SolverConfig& cfg, double grad_norm, double tol) {
  if (cfg.inner_max) return *cfg.inner_max;
  constexpr std::size_t kHardCap = 200;
  const double sigma = obj.strong_convexity_floor();
  if (!(sigma > 0.0) || !(tol > 0.0)) return kHardCap;
  const std::size_t bound = refine_iteration_bound(obj.curvature_bound(), sigma, grad_norm, tol, cfg.epsilon);
  return std::min(bound + 5, kHardCap);
}

RefineResult refine_loop(const Objective& obj, const Vector& x, const Vector& grad, const SpdFactor& h, double tol,
                         std::size_t inner_max) {
  if (!(tol > 0.0)) throw std::invalid_argument("refine_loop: tol must be positive");
  RefineResult res;
  res.direction = h.solve(grad);
  Vector r = obj.hessian_vec(x, res.direction) - grad;
  res.residual_norm = r.norm();
  int increases = 0;
  while (res.residual_norm > tol && res.iterations < inner_max) {
    res.direction -= h.solve(r);
    r = obj.hessian_vec(x, res.direction) - grad;
    const double next = r.norm();
    ++res.iterations;
    increases = next > res.residual_norm ? increases + 1 : 0;
    res.residual_norm = next;
    if (!std::isfinite(next) || increases >= 3)
      throw RefinementDivergenceError("refine_loop: residual increased for 3 consecutive steps");
  }
  res.converged = res.residual_norm <= tol;
  return res;
}

Matrix newsamp_matrix(const TopEigen& eig, std::size_t p, double eta) {
  const auto r = eig.vectors.cols();
  const double tail = eig.values[r];
  Matrix h = Matrix::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)) * tail;
  for (Eigen::Index k = 0; k < r; ++k) h += (eig.values[k] - tail) * eig.vectors.col(k) * eig.vectors.col(k).transpose();
  return h / eta;
}

Vector newsamp_solve(const TopEigen& eig, double eta, const Vector& g) {
  const auto r = eig.vectors.cols();
  const double tail = eig.values[r];
  if (!(tail > 0.0)) throw RankError("newsamp: eigenvalue λ_{r+1} must be positive");
  Vector coeff = eig.vectors.transpose() * g;
  for (Eigen::Index k = 0; k < r; ++k) coeff[k] *= 1.0 / eig.values[k] - 1.0 / tail;
  return eta * (g / tail + eig.vectors * coeff);
}

namespace {

Direction solve_with(const Matrix& h, const Vector& g) {
  Direction d;
  d.step = spd_factor(h).solve(g);
  d.surrogate = h;
  return d;
}

Direction refined(const DirectionContext& ctx, Matrix h, const std::function<Matrix()>& resample) {
  const double gn = ctx.grad.norm();
  const double tol = ctx.cfg.tol(gn);
  if (!(gn > 0.0)) {
    Direction d;
    d.step = Vector::Zero(ctx.grad.size());
    d.tol = tol;
    d.surrogate = std::move(h);
    return d;
  }
  const std::size_t inner_max = default_inner_max(ctx.obj, ctx.cfg, gn, tol);
  RefineResult rr;
  try {
    rr = refine_loop(ctx.obj, ctx.x, ctx.grad, spd_factor(h), tol, inner_max);
  } catch (const RefinementDivergenceError&) {
    h = resample();
    rr = refine_loop(ctx.obj, ctx.x, ctx.grad, spd_factor(h), tol, inner_max);
  }
  Direction d;
  d.step = std::move(rr.direction);
  d.inner_iters = rr.iterations;
  d.inner_residual = rr.residual_norm;
  d.inner_converged = rr.converged;
  d.tol = tol;
  d.surrogate = std::move(h);
  return d;
}

}  // namespace

Direction dir_exact_newton(const DirectionContext& ctx) { return solve_with(ctx.obj.explicit_hessian(ctx.x), ctx.grad); }

Direction dir_sub_newton(const DirectionContext& ctx) { return solve_with(sampled_hessian(ctx), ctx.grad); }

Direction dir_sketch_newton(const DirectionContext& ctx) { return solve_with(sketched_hessian(ctx), ctx.grad); }

Direction dir_re_sub_newton(const DirectionContext& ctx) {
  return refined(ctx, sampled_hessian(ctx), [&] { return sampled_hessian(ctx, streams::resample); });
}

Direction dir_re_sketch_newton(const DirectionContext& ctx) {
  return refined(ctx, sketched_hessian(ctx), [&] { return sketched_hessian(ctx, streams::resample); });
}

Direction dir_pcg_newton(const DirectionContext& ctx) {
  Matrix h = ctx.cfg.pcg_sketch ? sketched_hessian(ctx) : sampled_hessian(ctx);
  const SpdFactor hf = spd_factor(h);
  const double gn = ctx.grad.norm();
  const double tol = ctx.cfg.tol(gn);
  const auto res = pcg([&](const Vector& v) { return ctx.obj.hessian_vec(ctx.x, v); }, ctx.grad,
                       [&](const Vector& r) { return hf.solve(r); }, tol, default_inner_max(ctx.obj, ctx.cfg, gn, tol));
  Direction d;
  d.step = res.solution;
  d.inner_iters = res.iterations;
  d.inner_residual = res.residual_norm;
  d.inner_converged = res.converged;
  d.tol = tol;
  d.surrogate = std::move(h);
  return d;
}

Direction dir_newsamp(const DirectionContext& ctx) {
  const Matrix hs = sampled_hessian(ctx);
  const TopEigen eig = top_r_eig(hs, ctx.cfg.newsamp_rank);
  Direction d;
  d.step = newsamp_solve(eig, ctx.cfg.newsamp_eta, ctx.grad);
  d.surrogate = newsamp_matrix(eig, ctx.obj.dim(), ctx.cfg.newsamp_eta);
  return d;
}

Direction dir_reg_sub_newton(const DirectionContext& ctx) {
  Matrix h = sampled_hessian(ctx);
  h.diagonal().array() += ctx.cfg.reg_alpha;
  return solve_with(h, ctx.grad);
}

Direction dir_sncg(const DirectionContext& ctx) {
  const std::size_t n = ctx.obj.n_terms();
  const auto sample =
      draw_sample(n, ctx.cfg.sample.resolve(n), ctx.cfg.sampling, ctx.stream.split(streams::hessian_sample));
  const double tol = ctx.cfg.cg_eps0 * ctx.grad.norm();
  const std::size_t max_iter = ctx.cfg.inner_max.value_or(std::max<std::size_t>(50, 4 * ctx.obj.dim()));
  const auto res = pcg([&](const Vector& v) { return ctx.obj.sub_hessian_vec(ctx.x, sample, v); }, ctx.grad,
                       [](const Vector& r) { return r; }, tol, max_iter);
  if (!res.converged) throw CgStagnationError("sncg: CG did not reach ε₀‖∇F‖ within inner_max iterations");
  Direction d;
  d.step = res.solution;
  d.inner_iters = res.iterations;
  d.inner_residual = res.residual_norm;
  d.tol = tol;
  if (ctx.cfg.gamma != GammaMode::off && ctx.obj.dim() <= 500) d.surrogate = ctx.obj.sub_hessian(ctx.x, sample);
  return d;
}

Direction dir_sub_hess_grad(const DirectionContext& ctx) {
  const std::size_t n = ctx.obj.n_terms();
  const Matrix h = sampled_hessian(ctx);
  const auto gsample =
      draw_sample(n, ctx.cfg.grad_sample.resolve(n), ctx.cfg.sampling, ctx.stream.split(streams::gradient_sample));
  const Vector g = ctx.cfg.sampling == Sampling::exhaustive ? ctx.grad : ctx.obj.per_term_gradient(ctx.x, gsample);
  return solve_with(h, g);
}

Direction compute_direction(const DirectionContext& ctx, std::size_t t) {
  if (is_refined(ctx.cfg.strategy) && t < ctx.cfg.warmup_iters) return dir_sncg(ctx);
  switch (ctx.cfg.strategy) {
    case Strategy::exact_newton: return dir_exact_newton(ctx);
    case Strategy::sub_newton: return dir_sub_newton(ctx);
    case Strategy::sketch_newton: return dir_sketch_newton(ctx);
    case Strategy::re_sub_newton: return dir_re_sub_newton(ctx);
    case Strategy::re_sketch_newton: return dir_re_sketch_newton(ctx);
    case Strategy::pcg_newton: return dir_pcg_newton(ctx);
    case Strategy::newsamp: return dir_newsamp(ctx);
    case Strategy::reg_sub_newton: return dir_reg_sub_newton(ctx);
    case Strategy::sub_hess_grad: return dir_sub_hess_grad(ctx);
    case Strategy::sncg: return dir_sncg(ctx);
  }
  throw std::logic_error("compute_direction: unknown strategy");
}

RunResult newton_drive(const Objective& obj, const SolverConfig& cfg, std::optional<Vector> x0, RunClock clock) {
  cfg.validate();
  if (!(obj.strong_convexity_floor() > 0.0) && !cfg.allow_singular)
    throw std::invalid_argument("newton_drive: objective is not strongly convex (λ = 0); set allow_singular to override");
  if (!clock) {
    const auto start = std::chrono::steady_clock::now();
    clock = [start] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  }

  RunResult out;
  out.x = x0 ? std::move(*x0) : Vector::Zero(static_cast<Eigen::Index>(obj.dim()));
  if (static_cast<std::size_t>(out.x.size()) != obj.dim()) throw DimensionError("newton_drive: x0 has wrong dimension");

  const CounterRng base(cfg.seed);
  const bool want_gamma =
      cfg.gamma == GammaMode::on || (cfg.gamma == GammaMode::automatic && obj.dim() <= 500);

  for (std::size_t t = 0;; ++t) {
    IterationRecord rec;
    rec.t = t;
    Vector grad;
    try {
      rec.f = obj.value(out.x);
      grad = obj.gradient(out.x);
    } catch (const std::domain_error& e) {
      rec.wall_seconds = clock();
      out.records.push_back(rec);
      out.termination = Termination::numerical_failure;
      out.failure = e.what();
      return out;
    }
    rec.grad_norm = grad.norm();
    if (!std::isfinite(rec.f) || !std::isfinite(rec.grad_norm)) {
      rec.wall_seconds = clock();
      out.records.push_back(rec);
      out.termination = Termination::numerical_failure;
      out.failure = "non-finite objective or gradient";
      return out;
    }
    if (rec.grad_norm <= cfg.gtol || t >= cfg.max_outer) {
      rec.wall_seconds = clock();
      out.records.push_back(rec);
      out.termination = rec.grad_norm <= cfg.gtol ? Termination::gtol_reached : Termination::max_outer;
      return out;
    }

    const DirectionContext ctx{obj, out.x, grad, cfg, base.split(t)};
    Direction dir;
    try {
      dir = compute_direction(ctx, t);
    } catch (const std::runtime_error& e) {
      rec.wall_seconds = clock();
      out.records.push_back(rec);
      out.termination = Termination::numerical_failure;
      out.failure = e.what();
      return out;
    }

    rec.inner_iters = dir.inner_iters;
    rec.tol = dir.tol;
    rec.direction_norm = dir.step.norm();
    rec.residual_norm = residual_check(obj, out.x, dir.step, grad);
    if (want_gamma && dir.surrogate) {
      try {
        rec.gamma_estimate = measure_gamma(obj, out.x, *dir.surrogate, ctx.stream.split(streams::gamma).next_u64());
      } catch (const std::runtime_error&) {
        // γ is diagnostic only; a surrogate that cannot be factored leaves it empty.
      }
    }

    double step = 1.0;
    if (cfg.damping) {
      while (step > 1e-10 && !(obj.value(out.x - step * dir.step) <= rec.f)) step *= 0.5;
    }
    out.x -= step * dir.step;
    rec.wall_seconds = clock();
    out.records.push_back(rec);
  }
}

}  // namespace ssn
