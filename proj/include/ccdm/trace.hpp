#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ccdm {

class Objective;

/// One sample of a run. `coordinate_ops` counts one per coordinate-gradient
/// step and n per full-gradient evaluation (see also
/// Objective::coupled_step_cost for dense accelerated coordinate steps).
struct TraceEvent {
  std::uint64_t coordinate_ops = 0;
  double wall_seconds = 0.0;
  double f_value = 0.0;
};

struct ConvergenceTrace {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<TraceEvent> events;
};

/// Header `coordinate_ops,wall_seconds,f_value`.
void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace);
void write_trace_csv_file(const std::string& path, const ConvergenceTrace& trace);
ConvergenceTrace read_trace_csv_file(const std::string& path);

/// First recorded coordinate_ops at which f_value <= threshold.
std::optional<std::uint64_t> ops_to_reach(const ConvergenceTrace& trace, double threshold);

/// Stop rules and sampling density shared by all solvers.
struct RunControl {
  std::uint64_t max_ops = std::numeric_limits<std::uint64_t>::max();
  double time_budget_seconds = std::numeric_limits<double>::infinity();
  /// Stop as soon as a recorded f value reaches this level.
  std::optional<double> target_value;
  /// Samples are taken when coordinate_ops grows by this factor.
  double trace_factor = 1.3;
  bool record = true;
};

/// Counts work, keeps the clock, samples the trace at geometric intervals of
/// coordinate_ops and decides when a run must stop. Time spent evaluating f
/// for the trace is excluded from wall_seconds.
class RunMonitor {
 public:
  RunMonitor(const Objective* f, std::string method, std::uint64_t seed, RunControl control = {});

  void charge(std::uint64_t ops) noexcept { ops_ += ops; }
  std::uint64_t ops() const noexcept { return ops_; }

  /// Records an event if the sampling threshold has been crossed.
  void checkpoint(std::span<const double> x);
  /// Records an event unconditionally (deduplicated on equal op counts).
  void record(std::span<const double> x);
  bool should_stop();
  bool target_reached() const noexcept { return target_reached_; }

  double elapsed() const;
  ConvergenceTrace finish(std::span<const double> x);

 private:
  using Clock = std::chrono::steady_clock;

  const Objective* f_;
  RunControl control_;
  ConvergenceTrace trace_;
  std::uint64_t ops_ = 0;
  std::uint64_t next_record_ = 0;
  Clock::time_point start_;
  Clock::duration paused_{};
  std::uint32_t polls_ = 0;
  bool out_of_time_ = false;
  bool target_reached_ = false;
};

}  // namespace ccdm
