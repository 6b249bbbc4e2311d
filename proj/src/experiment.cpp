#include "ssn/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "ssn/data.hpp"
#include "ssn/objectives.hpp"
#include "ssn/rng.hpp"

namespace ssn {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  return parts;
}

double to_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out))
    throw UsageError("'" + key + "' expects a real number, got '" + v + "'");
  return out;
}

std::size_t to_count(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw UsageError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

bool to_flag(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw UsageError("'" + key + "' expects a boolean, got '" + v + "'");
}

SampleSize to_sample(const std::string& key, const std::string& v) {
  const double x = to_real(key, v);
  if (x > 0.0 && x < 1.0) return SampleSize::of_n(x);
  if (x == 1.0 && v.find_first_of(".eE") != std::string::npos) return SampleSize::of_n(1.0);
  if (x >= 1.0 && x == std::floor(x)) return SampleSize::count(static_cast<std::size_t>(x));
  throw UsageError("'" + key + "' expects a fraction in (0,1) or a positive integer count, got '" + v + "'");
}

}  // namespace

SolverConfig parse_solver_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const auto strategy = strategy_from_string(name);
  if (!strategy) throw UsageError("--solver: unknown solver '" + name + "'");
  SolverConfig cfg;
  cfg.strategy = *strategy;
  if (colon == std::string::npos) return cfg;

  for (const auto& kv : split(spec.substr(colon + 1), ',')) {
    if (kv.empty()) continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--solver: expected key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string v = kv.substr(eq + 1);
    if (key == "sample") {
      cfg.sample = to_sample(key, v);
    } else if (key == "sampling") {
      if (v == "uniform") cfg.sampling = Sampling::uniform;
      else if (v == "exhaustive" || v == "full") cfg.sampling = Sampling::exhaustive;
      else throw UsageError("'sampling' expects uniform|exhaustive, got '" + v + "'");
    } else if (key == "eps") {
      cfg.epsilon = to_real(key, v);
    } else if (key == "tol") {
      if (v == "paper") cfg.tol = TolSchedule::paper(cfg.tol.kind == TolSchedule::Kind::paper ? cfg.tol.c : 0.1);
      else if (v == "quadratic") cfg.tol = TolSchedule::quadratic(1.0);
      else if (v == "constant") cfg.tol = TolSchedule::constant(1e-8);
      else throw UsageError("'tol' expects paper|quadratic|constant, got '" + v + "'");
    } else if (key == "tolc") {
      cfg.tol.c = to_real(key, v);
    } else if (key == "inner_max") {
      cfg.inner_max = to_count(key, v);
    } else if (key == "eps0") {
      cfg.cg_eps0 = to_real(key, v);
    } else if (key == "gsample") {
      cfg.grad_sample = to_sample(key, v);
    } else if (key == "rank") {
      cfg.newsamp_rank = to_count(key, v);
    } else if (key == "eta") {
      cfg.newsamp_eta = to_real(key, v);
    } else if (key == "alpha") {
      cfg.reg_alpha = to_real(key, v);
    } else if (key == "sketch") {
      const auto kind = sketch_kind_from_string(v);
      if (!kind) throw UsageError("'sketch' expects gaussian|uniform|leverage|sparse, got '" + v + "'");
      cfg.sketch_kind = *kind;
    } else if (key == "sdim") {
      cfg.sketch_dim = to_count(key, v);
    } else if (key == "sconst") {
      cfg.sketch_const = to_real(key, v);
    } else if (key == "beta") {
      cfg.sketch_beta = to_real(key, v);
    } else if (key == "scaled") {
      cfg.sketch_scaled_accuracy = to_flag(key, v);
    } else if (key == "precond") {
      if (v == "sub") cfg.pcg_sketch = false;
      else if (v == "sketch") cfg.pcg_sketch = true;
      else throw UsageError("'precond' expects sub|sketch, got '" + v + "'");
    } else if (key == "warmup") {
      cfg.warmup_iters = to_count(key, v);
    } else if (key == "damping") {
      cfg.damping = to_flag(key, v);
    } else if (key == "gamma") {
      if (v == "auto") cfg.gamma = GammaMode::automatic;
      else if (v == "on") cfg.gamma = GammaMode::on;
      else if (v == "off") cfg.gamma = GammaMode::off;
      else throw UsageError("'gamma' expects auto|on|off, got '" + v + "'");
    } else {
      throw UsageError("--solver: unknown key '" + key + "' in '" + spec + "'");
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--solver ") + spec + ": " + e.what());
  }
  return cfg;
}

namespace {

SynthParams parse_synth(const std::string& text) {
  SynthParams sp;
  for (const auto& kv : split(text, ',')) {
    if (kv.empty()) continue;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--synth: expected key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq);
    const std::string v = kv.substr(eq + 1);
    if (key == "n") sp.n = to_count("--synth n", v);
    else if (key == "p") sp.p = to_count("--synth p", v);
    else if (key == "cond") sp.cond = to_real("--synth cond", v);
    else throw UsageError("--synth: unknown key '" + key + "'");
  }
  if (sp.p < 1 || sp.n < sp.p) throw UsageError("--synth: need n >= p >= 1");
  if (!(sp.cond >= 1.0)) throw UsageError("--synth: cond must be >= 1");
  return sp;
}

void build_app(CLI::App& app, ExperimentConfig& cfg, std::string& synth_text, std::vector<std::string>& solver_specs) {
  app.add_option("--data", cfg.data_path, "LIBSVM dataset path");
  app.add_option("--synth", synth_text, "synthetic logistic data: n=..,p=..,cond=..");
  app.add_option("--lambda", cfg.lambda, "ridge weight λ (> 0 unless --allow-singular)")->default_val(cfg.lambda);
  app.add_option("--solver", solver_specs, "solver spec name:key=val,... (repeatable)");
  app.add_option("--gtol", cfg.gtol, "stop when ‖∇F‖ ≤ gtol")->default_val(cfg.gtol);
  app.add_option("--max-outer", cfg.max_outer, "outer iteration limit")->default_val(cfg.max_outer);
  app.add_option("--seed", cfg.seed, "base seed")->default_val(cfg.seed);
  app.add_option("--reps", cfg.repetitions, "repetitions per solver")->default_val(cfg.repetitions);
  app.add_option("--out", cfg.out_dir, "output directory")->default_val(cfg.out_dir);
  app.add_flag("--normalize", cfg.normalize, "scale each feature column by its max |value|");
  app.add_flag("--allow-singular", cfg.allow_singular, "permit λ = 0");
  app.add_flag("--no-timing", cfg.no_timing, "write 0 for wall_seconds (byte-reproducible traces)");
  app.footer(
      "Solvers: exact, sub, sketch, resub, resketch, pcg, newsamp, regsub, subgrad, sncg\n"
      "Solver keys: sample, sampling, eps, tol=paper|quadratic|constant, tolc, inner_max, eps0,\n"
      "  gsample, rank, eta, alpha, sketch=gaussian|uniform|leverage|sparse, sdim, sconst, beta,\n"
      "  scaled, precond=sub|sketch, warmup, damping, gamma=auto|on|off\n"
      "Exit codes: 0 ok, 2 I/O, 64 usage");
}

}  // namespace

std::string usage_text() {
  CLI::App app("Sub-sampled Newton benchmark runner", "ssn_bench");
  ExperimentConfig cfg;
  std::string synth;
  std::vector<std::string> solvers;
  build_app(app, cfg, synth, solvers);
  return app.help();
}

ExperimentConfig parse_args(int argc, const char* const* argv) {
  CLI::App app("Sub-sampled Newton benchmark runner", "ssn_bench");
  ExperimentConfig cfg;
  std::string synth_text;
  std::vector<std::string> solver_specs;
  build_app(app, cfg, synth_text, solver_specs);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (cfg.data_path.has_value() == !synth_text.empty())
    throw UsageError("exactly one of --data or --synth is required");
  if (!synth_text.empty()) cfg.synth = parse_synth(synth_text);
  if (!std::isfinite(cfg.lambda) || cfg.lambda < 0.0 || (cfg.lambda == 0.0 && !cfg.allow_singular))
    throw UsageError("--lambda must be > 0 (or >= 0 with --allow-singular)");
  if (cfg.repetitions < 1) throw UsageError("--reps must be >= 1");
  if (!(cfg.gtol >= 0.0)) throw UsageError("--gtol must be >= 0");
  if (solver_specs.empty()) throw UsageError("at least one --solver is required");

  for (std::size_t i = 0; i < solver_specs.size(); ++i) {
    SolverSpec s;
    s.cfg = parse_solver_spec(solver_specs[i]);
    s.cfg.gtol = cfg.gtol;
    s.cfg.max_outer = cfg.max_outer;
    s.cfg.allow_singular = cfg.allow_singular;
    s.label = "s" + std::to_string(i) + "_" + to_string(s.cfg.strategy);
    cfg.solvers.push_back(std::move(s));
  }
  return cfg;
}

std::string format_summary(const std::vector<RunSummary>& runs) {
  // Wall times are reported relative to the fastest run of each repetition.
  std::map<std::size_t, double> fastest;
  for (const auto& r : runs) {
    auto [it, fresh] = fastest.try_emplace(r.repetition, r.wall_seconds);
    if (!fresh) it->second = std::min(it->second, r.wall_seconds);
  }
  std::ostringstream out;
  char line[512];
  std::snprintf(line, sizeof line, "%-24s %4s %6s %8s %12s %9s %14s %-18s %s\n", "solver", "rep", "outer", "inner",
                "wall_s", "rel_time", "grad_norm", "termination", "convergence");
  out << line;
  for (const auto& r : runs) {
    const double base = fastest[r.repetition];
    const double rel = base > 0.0 ? r.wall_seconds / base : 1.0;
    std::snprintf(line, sizeof line, "%-24s %4zu %6zu %8zu %12.6f %9.3f %14.6e %-18s %s\n", r.label.c_str(),
                  r.repetition, r.outer_iters, r.total_inner_iters, r.wall_seconds, rel, r.final_grad_norm,
                  to_string(r.termination).c_str(), to_string(r.convergence).c_str());
    out << line;
    if (!r.failure.empty()) out << "  failure: " << r.failure << '\n';
  }
  return out.str();
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  ExperimentOutcome outcome;
  Dataset data;
  try {
    if (cfg.data_path) {
      LibsvmStats stats;
      data = load_libsvm(*cfg.data_path, {}, &stats);
      if (stats.relabeled > 0) log << "note: " << stats.relabeled << " labels remapped to ±1 by sign\n";
    } else {
      const SynthParams sp = cfg.synth.value_or(SynthParams{});
      data = synth_logistic(sp.n, sp.p, sp.cond, CounterRng(cfg.seed).split(0xDA7A).next_u64());
    }
  } catch (const std::exception& e) {
    outcome.exit_code = kExitIo;
    outcome.error = std::string("cannot load dataset: ") + e.what();
    return outcome;
  }
  if (cfg.normalize) data = Dataset(data.features().max_abs_scaled(), data.labels());
  if (data.n_samples() == 0) {
    outcome.exit_code = kExitIo;
    outcome.error = "dataset has no samples";
    return outcome;
  }

  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) {
    outcome.exit_code = kExitIo;
    outcome.error = "cannot create output directory '" + cfg.out_dir + "': " + ec.message();
    return outcome;
  }

  const RidgeLogistic obj(data, cfg.lambda);
  const CounterRng seeds(cfg.seed);
  for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
    for (std::size_t i = 0; i < cfg.solvers.size(); ++i) {
      SolverConfig sc = cfg.solvers[i].cfg;
      sc.seed = seeds.split(rep).split(i).next_u64();
      RunClock clock;
      if (cfg.no_timing) clock = [] { return 0.0; };

      RunSummary sum;
      sum.label = cfg.solvers[i].label;
      sum.strategy = sc.strategy;
      sum.repetition = rep;
      RunResult res;
      try {
        res = newton_drive(obj, sc, std::nullopt, clock);
      } catch (const std::invalid_argument& e) {
        outcome.exit_code = kExitUsage;
        outcome.error = sum.label + ": " + e.what();
        return outcome;
      }

      sum.outer_iters = res.records.size() - 1;
      for (const auto& r : res.records) sum.total_inner_iters += r.inner_iters;
      sum.wall_seconds = res.records.back().wall_seconds;
      sum.final_grad_norm = res.records.back().grad_norm;
      sum.termination = res.termination;
      sum.failure = res.failure;
      sum.convergence = classify_trace(res.records).classification;

      sum.csv_path = (std::filesystem::path(cfg.out_dir) / (sum.label + "_rep" + std::to_string(rep) + ".csv")).string();
      std::ofstream csv(sum.csv_path, std::ios::binary);
      write_trace_csv(csv, res.records);
      if (!csv) {
        outcome.exit_code = kExitIo;
        outcome.error = "cannot write '" + sum.csv_path + "'";
        return outcome;
      }
      outcome.runs.push_back(std::move(sum));
    }
  }

  const std::string table = format_summary(outcome.runs);
  log << table;
  std::ofstream summary(std::filesystem::path(cfg.out_dir) / "summary.txt", std::ios::binary);
  summary << table;
  if (!summary) {
    outcome.exit_code = kExitIo;
    outcome.error = "cannot write summary.txt";
  }
  return outcome;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = parse_args(argc, argv);
  } catch (const HelpRequested& h) {
    out << h.what();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n\n" << usage_text();
    return kExitUsage;
  }
  const ExperimentOutcome outcome = run_experiment(cfg, out);
  if (!outcome.error.empty()) err << "error: " << outcome.error << '\n';
  return outcome.exit_code;
}

}  // namespace ssn
