#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ssn {

// One outer Newton iteration. The final row of a run describes the point at
// which the run stopped and carries no direction.
struct IterationRecord {
  std::size_t t = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  std::size_t inner_iters = 0;
  // ‖∇²F(x_t)·p_t − ∇F(x_t)‖ of the direction taken at t.
  std::optional<double> residual_norm;
  double direction_norm = 0.0;
  // Cumulative since the start of the run.
  double wall_seconds = 0.0;
  // ‖(∇²F − H)H⁻¹‖ for the Hessian surrogate used at t.
  std::optional<double> gamma_estimate;
  // Forcing tolerance the direction had to meet (refined and CG strategies).
  std::optional<double> tol;
};

inline constexpr const char* kTraceCsvHeader = "t,f,grad_norm,inner_iters,residual_norm,wall_seconds,gamma";

// CSV with kTraceCsvHeader, '\n' line endings, reals at 17 significant
// digits, empty field for an absent optional.
void write_trace_csv(std::ostream& out, std::span<const IterationRecord> records);
std::string trace_csv_string(std::span<const IterationRecord> records);
// Inverse of write_trace_csv for the CSV columns (tol and direction_norm are
// not part of the file).
std::vector<IterationRecord> read_trace_csv(std::istream& in);

}  // namespace ssn
