#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssn/diagnostics.hpp"
#include "ssn/solvers.hpp"

namespace ssn {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 2;
inline constexpr int kExitUsage = 64;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by parse_args for --help; what() is the flag table.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SynthParams {
  std::size_t n = 1000;
  std::size_t p = 10;
  double cond = 10.0;
};

struct SolverSpec {
  std::string label;  // unique per experiment, used for file names
  SolverConfig cfg;
};

struct ExperimentConfig {
  std::optional<std::string> data_path;
  std::optional<SynthParams> synth;
  double lambda = 1e-4;
  std::vector<SolverSpec> solvers;
  std::string out_dir = "ssn_out";
  std::size_t repetitions = 1;
  std::uint64_t seed = 0;
  double gtol = 1e-10;
  std::size_t max_outer = 100;
  bool normalize = false;
  bool allow_singular = false;
  // Write 0 for wall_seconds so traces are byte-reproducible.
  bool no_timing = false;
};

// `name:key=val,...`. Keys: sample, sampling, eps, tol, tolc, inner_max,
// eps0, gsample, rank, eta, alpha, sketch, sdim, sconst, beta, scaled,
// precond, warmup, damping, gamma. Sample sizes below 1 are fractions of n,
// otherwise integer counts.
SolverConfig parse_solver_spec(const std::string& spec);

ExperimentConfig parse_args(int argc, const char* const* argv);
std::string usage_text();

struct RunSummary {
  std::string label;
  Strategy strategy = Strategy::exact_newton;
  std::size_t repetition = 0;
  std::size_t outer_iters = 0;
  std::size_t total_inner_iters = 0;
  double wall_seconds = 0.0;
  double final_grad_norm = 0.0;
  Termination termination = Termination::max_outer;
  ConvergenceClass convergence = ConvergenceClass::inconclusive;
  std::string csv_path;
  std::string failure;
};

struct ExperimentOutcome {
  int exit_code = kExitOk;
  std::string error;
  std::vector<RunSummary> runs;
};

// Loads or synthesizes the dataset, runs every (solver, repetition) pair and
// writes <out>/<label>_rep<k>.csv plus <out>/summary.txt. The summary table
// also goes to `log`.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::ostream& log);

std::string format_summary(const std::vector<RunSummary>& runs);

// Entry point shared by the CLI binary: parse, run, map errors to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ssn
