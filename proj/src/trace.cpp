#include "ccdm/trace.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "ccdm/error.hpp"
#include "ccdm/objective.hpp"

namespace ccdm {

void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace) {
  out << "coordinate_ops,wall_seconds,f_value\n";
  out << std::setprecision(17);
  for (const TraceEvent& e : trace.events) {
    out << e.coordinate_ops << ',' << e.wall_seconds << ',' << e.f_value << '\n';
  }
}

void write_trace_csv_file(const std::string& path, const ConvergenceTrace& trace) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write trace file: " + path);
  write_trace_csv(out, trace);
}

ConvergenceTrace read_trace_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open trace file: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "coordinate_ops,wall_seconds,f_value") {
    throw InvalidInput("trace file: bad header in " + path);
  }
  ConvergenceTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    TraceEvent e;
    char comma1 = 0, comma2 = 0;
    if (!(row >> e.coordinate_ops >> comma1 >> e.wall_seconds >> comma2 >> e.f_value) || comma1 != ',' ||
        comma2 != ',') {
      throw InvalidInput("trace file: malformed row '" + line + "'");
    }
    trace.events.push_back(e);
  }
  return trace;
}

std::optional<std::uint64_t> ops_to_reach(const ConvergenceTrace& trace, double threshold) {
  for (const TraceEvent& e : trace.events) {
    if (e.f_value <= threshold) return e.coordinate_ops;
  }
  return std::nullopt;
}

RunMonitor::RunMonitor(const Objective* f, std::string method, std::uint64_t seed, RunControl control)
    : f_(f), control_(control), start_(Clock::now()) {
  trace_.method = std::move(method);
  trace_.seed = seed;
  if (!(control_.trace_factor > 1.0)) control_.trace_factor = 1.3;
}

double RunMonitor::elapsed() const {
  return std::chrono::duration<double>(Clock::now() - start_ - paused_).count();
}

void RunMonitor::checkpoint(std::span<const double> x) {
  if (ops_ >= next_record_) record(x);
}

void RunMonitor::record(std::span<const double> x) {
  const auto grown = static_cast<std::uint64_t>(std::ceil(static_cast<double>(ops_) * control_.trace_factor));
  next_record_ = std::max(grown, ops_ + 1);
  if (f_ == nullptr || !control_.record) return;
  if (!trace_.events.empty() && trace_.events.back().coordinate_ops == ops_) return;
  const double wall = elapsed();
  const auto pause_begin = Clock::now();
  const double value = f_->value(x);
  paused_ += Clock::now() - pause_begin;
  trace_.events.push_back({ops_, wall, value});
  if (control_.target_value && value <= *control_.target_value) target_reached_ = true;
}

bool RunMonitor::should_stop() {
  if (target_reached_ || out_of_time_ || ops_ >= control_.max_ops) return true;
  if (std::isfinite(control_.time_budget_seconds) && (++polls_ & 255u) == 0) {
    out_of_time_ = elapsed() >= control_.time_budget_seconds;
  }
  return out_of_time_;
}

ConvergenceTrace RunMonitor::finish(std::span<const double> x) {
  if (control_.record && f_ != nullptr && (trace_.events.empty() || trace_.events.back().coordinate_ops != ops_)) {
    record(x);
  }
  return std::move(trace_);
}

}  // namespace ccdm
