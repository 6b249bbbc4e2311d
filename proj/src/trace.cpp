#include "ssn/trace.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ssn {

namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_real(*v) : std::string(); }

std::optional<double> parse_opt(const std::string& field) {
  if (field.empty()) return std::nullopt;
  return std::stod(field);
}

}  // namespace

void write_trace_csv(std::ostream& out, std::span<const IterationRecord> records) {
  out << kTraceCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.t << ',' << fmt_real(r.f) << ',' << fmt_real(r.grad_norm) << ',' << r.inner_iters << ','
        << fmt_opt(r.residual_norm) << ',' << fmt_real(r.wall_seconds) << ',' << fmt_opt(r.gamma_estimate) << '\n';
  }
}

std::string trace_csv_string(std::span<const IterationRecord> records) {
  std::ostringstream out;
  write_trace_csv(out, records);
  return out.str();
}

std::vector<IterationRecord> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceCsvHeader) throw std::runtime_error("read_trace_csv: bad header");
  std::vector<IterationRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 7) throw std::runtime_error("read_trace_csv: expected 7 fields in '" + line + "'");
    IterationRecord r;
    r.t = std::stoul(fields[0]);
    r.f = std::stod(fields[1]);
    r.grad_norm = std::stod(fields[2]);
    r.inner_iters = std::stoul(fields[3]);
    r.residual_norm = parse_opt(fields[4]);
    r.wall_seconds = std::stod(fields[5]);
    r.gamma_estimate = parse_opt(fields[6]);
    out.push_back(r);
  }
  return out;
}

}  // namespace ssn
