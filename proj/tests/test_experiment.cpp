#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ssn/experiment.hpp"

using namespace ssn;
namespace fs = std::filesystem;

namespace {

struct Cli {
  int code = 0;
  std::string out, err;
};

Cli run(std::vector<std::string> args) {
  args.insert(args.begin(), "ssn_bench");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

ExperimentConfig parse(std::vector<std::string> args) {
  args.insert(args.begin(), "ssn_bench");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_args(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

bool summary_contains(const std::string& summary, const std::string& label) {
  return summary.find(label) != std::string::npos;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("ssn_test_experiment_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("synthetic single-solver config") {
  const ExperimentConfig cfg =
      parse({"--synth", "n=500,p=10,cond=100", "--lambda", "1e-3", "--solver", "resub:sample=0.05,eps=0.5", "--out", "d/"});
  REQUIRE(cfg.synth.has_value());
  CHECK(cfg.synth->n == 500);
  CHECK(cfg.synth->p == 10);
  CHECK(cfg.synth->cond == 100.0);
  CHECK(cfg.lambda == 1e-3);
  CHECK(cfg.out_dir == "d/");
  REQUIRE(cfg.solvers.size() == 1);
  CHECK(cfg.solvers[0].cfg.strategy == Strategy::re_sub_newton);
  CHECK(cfg.solvers[0].cfg.sample.fraction);
  CHECK(cfg.solvers[0].cfg.sample.value == 0.05);
  CHECK(cfg.solvers[0].cfg.epsilon == 0.5);
}

TEST_CASE("two-solver comparison on a dataset file") {
  const ExperimentConfig cfg =
      parse({"--data", "a9a.libsvm", "--solver", "pcg:sample=0.1", "--solver", "sncg:sample=0.1,eps0=0.05"});
  CHECK(cfg.data_path == "a9a.libsvm");
  REQUIRE(cfg.solvers.size() == 2);
  CHECK(cfg.solvers[0].cfg.strategy == Strategy::pcg_newton);
  CHECK(cfg.solvers[1].cfg.strategy == Strategy::sncg);
  CHECK(cfg.solvers[1].cfg.cg_eps0 == 0.05);
  CHECK(cfg.solvers[0].label != cfg.solvers[1].label);
}

TEST_CASE("global flags reach every solver") {
  const ExperimentConfig cfg = parse({"--synth", "n=100,p=3", "--solver", "exact", "--solver", "sub:sample=20", "--gtol",
                                      "1e-8", "--max-outer", "7", "--seed", "9", "--reps", "3"});
  CHECK(cfg.seed == 9);
  CHECK(cfg.repetitions == 3);
  for (const auto& s : cfg.solvers) {
    CHECK(s.cfg.gtol == 1e-8);
    CHECK(s.cfg.max_outer == 7);
  }
  CHECK_FALSE(cfg.solvers[1].cfg.sample.fraction);
  CHECK(cfg.solvers[1].cfg.sample.resolve(100) == 20);
}

TEST_CASE("solver mini-language keys") {
  const SolverConfig c = parse_solver_spec(
      "resketch:sketch=leverage,sdim=300,beta=0.5,tol=quadratic,tolc=2,inner_max=40,warmup=1,eps0=0.1,gamma=off");
  CHECK(c.strategy == Strategy::re_sketch_newton);
  CHECK(c.sketch_kind == SketchKind::leverage_rows);
  CHECK(c.sketch_dim == 300);
  CHECK(c.sketch_beta == 0.5);
  CHECK(c.tol.kind == TolSchedule::Kind::quadratic);
  CHECK(c.tol.c == 2.0);
  CHECK(c.inner_max == 40);
  CHECK(c.warmup_iters == 1);
  CHECK(c.gamma == GammaMode::off);

  const SolverConfig n = parse_solver_spec("newsamp:rank=4,eta=0.8,sample=1.0");
  CHECK(n.newsamp_rank == 4);
  CHECK(n.newsamp_eta == 0.8);
  CHECK(n.sample.fraction);
  CHECK(parse_solver_spec("pcg:precond=sketch").pcg_sketch);
  CHECK(parse_solver_spec("regsub:alpha=0.01").reg_alpha == 0.01);
  CHECK(parse_solver_spec("subgrad:gsample=300").grad_sample.resolve(1000) == 300);
}

TEST_CASE("bad solver specs are usage errors") {
  for (const char* spec : {"lissa", "resub:sample", "resub:bogus=1", "resub:eps=abc", "resub:eps=1.5", "sub:sample=2.5",
                           "resketch:sketch=srht", "newsamp:eta=0"}) {
    CAPTURE(spec);
    CHECK_THROWS_AS(parse_solver_spec(spec), UsageError);
  }
}

TEST_CASE("usage errors") {
  CHECK_THROWS_AS(parse({"--lambda", "-1", "--synth", "n=50,p=3", "--solver", "exact"}), UsageError);
  CHECK_THROWS_AS(parse({"--lambda", "0", "--synth", "n=50,p=3", "--solver", "exact"}), UsageError);
  CHECK_NOTHROW(parse({"--lambda", "0", "--allow-singular", "--synth", "n=50,p=3", "--solver", "exact"}));
  CHECK_THROWS_AS(parse({"--synth", "n=50,p=3", "--solver", "exact", "--bogus"}), UsageError);
  CHECK_THROWS_AS(parse({"--synth", "n=50,p=3", "--solver", "exact", "--reps", "x"}), UsageError);
  CHECK_THROWS_AS(parse({"--synth", "n=50,p=3", "--solver", "exact", "--reps", "0"}), UsageError);
  CHECK_THROWS_AS(parse({"--synth", "n=2,p=3", "--solver", "exact"}), UsageError);
  CHECK_THROWS_AS(parse({"--synth", "n=50,p=3"}), UsageError);
  CHECK_THROWS_AS(parse({"--solver", "exact"}), UsageError);
  CHECK_THROWS_AS(parse({"--data", "x", "--synth", "n=50,p=3", "--solver", "exact"}), UsageError);

  const Cli c = run({"--lambda", "-1", "--synth", "n=50,p=3", "--solver", "exact"});
  CHECK(c.code == kExitUsage);
  CHECK(c.err.find("--lambda") != std::string::npos);
  const Cli bad_value = run({"--synth", "n=50,p=3", "--solver", "exact", "--gtol", "abc"});
  CHECK(bad_value.code == kExitUsage);
  CHECK(bad_value.err.find("--gtol") != std::string::npos);
}

TEST_CASE("help prints the flag table") {
  const Cli c = run({"--help"});
  CHECK(c.code == kExitOk);
  for (const char* flag : {"--data", "--synth", "--lambda", "--solver", "--gtol", "--max-outer", "--seed", "--reps", "--out",
                           "--normalize", "--allow-singular"})
    CHECK(c.out.find(flag) != std::string::npos);
}

TEST_CASE("unreadable dataset exits with 2") {
  const Cli c = run({"--data", "/nonexistent/data.libsvm", "--solver", "exact", "--out", scratch("io").string()});
  CHECK(c.code == kExitIo);
}

TEST_CASE("exact and refined runs on a synthetic problem") {
  const fs::path dir = scratch("basic");
  const ExperimentConfig cfg = parse({"--synth", "n=500,p=10", "--lambda", "1e-2", "--solver", "exact", "--solver",
                                      "resub:sample=100", "--out", dir.string()});
  std::ostringstream log;
  const ExperimentOutcome res = run_experiment(cfg, log);
  REQUIRE(res.exit_code == kExitOk);
  REQUIRE(res.runs.size() == 2);
  CHECK(res.runs[0].termination == Termination::gtol_reached);
  CHECK(res.runs[0].outer_iters <= 8);
  CHECK(fs::exists(dir / "summary.txt"));
  CHECK(log.str() == slurp(dir / "summary.txt"));

  for (const auto& run : res.runs) {
    const std::string csv = slurp(run.csv_path);
    CHECK(csv.rfind(std::string(kTraceCsvHeader) + "\n", 0) == 0);
    const auto lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(lines == run.outer_iters + 2);  // header + one row per iteration + terminal row
    std::istringstream in(csv);
    const auto records = read_trace_csv(in);
    CHECK(classify_trace(records).classification == run.convergence);
    CHECK(summary_contains(slurp(dir / "summary.txt"), run.label));
  }
  fs::remove_all(dir);
}

TEST_CASE("repetitions are reproducible") {
  const fs::path a = scratch("rep_a"), b = scratch("rep_b");
  for (const auto& dir : {a, b}) {
    const Cli c = run({"--synth", "n=400,p=8,cond=30", "--lambda", "1e-3", "--solver", "resub:sample=0.1", "--solver",
                       "sketch:sketch=sparse", "--reps", "2", "--seed", "3", "--no-timing", "--out", dir.string()});
    REQUIRE(c.code == kExitOk);
  }
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (e.path().extension() != ".csv") continue;
    ++files;
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  }
  CHECK(files == 4);
  // Different repetitions draw different samples.
  CHECK(slurp(a / "s0_re_sub_newton_rep0.csv") != slurp(a / "s0_re_sub_newton_rep1.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("solver failures are reported and the run still succeeds") {
  const fs::path dir = scratch("failure");
  const Cli c = run({"--synth", "n=300,p=6,cond=100", "--lambda", "1e-4", "--solver", "sncg:sample=0.05,eps0=1e-9,inner_max=1",
                     "--out", dir.string()});
  CHECK(c.code == kExitOk);
  CHECK(c.out.find("numerical_failure") != std::string::npos);
  CHECK(c.out.find("failure:") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("loads LIBSVM files and normalizes columns") {
  const fs::path dir = scratch("libsvm");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "tiny.libsvm");
    f << "+1 1:2 2:-1\n-1 1:-4 3:1\n1 2:3 3:2\n0 1:1 2:1 3:1\n+1 1:3 3:-2\n-1 2:-2\n";
  }
  const Cli c = run({"--data", (dir / "tiny.libsvm").string(), "--lambda", "1e-1", "--normalize", "--solver", "exact",
                     "--out", (dir / "out").string()});
  CHECK(c.code == kExitOk);
  CHECK(c.out.find("labels remapped") != std::string::npos);
  CHECK(fs::exists(dir / "out" / "s0_exact_newton_rep0.csv"));
  fs::remove_all(dir);
}

TEST_CASE("ill-conditioned comparison across lambda") {
  for (const char* lambda : {"1e-2", "1e-5"}) {
    CAPTURE(lambda);
    const fs::path dir = scratch(std::string("lambda") + lambda);
    const ExperimentConfig cfg = parse({"--synth", "n=4000,p=20,cond=1000", "--lambda", lambda, "--max-outer", "200",
                                        "--solver", "resub:sample=0.05", "--solver", "sncg:sample=0.05,eps0=0.05", "--out",
                                        dir.string()});
    std::ostringstream log;
    const ExperimentOutcome res = run_experiment(cfg, log);
    REQUIRE(res.runs.size() == 2);
    const ConvergenceClass resub = res.runs[0].convergence;
    CHECK((resub == ConvergenceClass::superlinear || resub == ConvergenceClass::quadratic));
    if (std::string(lambda) == "1e-5") {
      const ConvergenceClass sncg = res.runs[1].convergence;
      CHECK((sncg == ConvergenceClass::linear || sncg == ConvergenceClass::inconclusive));
      CHECK(res.runs[1].outer_iters > res.runs[0].outer_iters);
    }
    fs::remove_all(dir);
  }
}
