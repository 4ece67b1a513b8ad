#include <cmath>
#include <memory>

#include "ccdm/error.hpp"
#include "ccdm/solvers.hpp"

namespace ccdm {

namespace {

void check_start(const Objective& f, std::span<const double> x0) {
  if (x0.size() != f.dim()) throw InvalidInput("solver: starting point has wrong length");
}

void check_lipschitz(double l) {
  if (!(l > 0.0) || !std::isfinite(l)) throw InvalidInput("solver: Lipschitz constant must be positive");
}

}  // namespace

SolveResult gm_solve(const Objective& f, std::span<const double> x0, double lipschitz, std::uint64_t iterations,
                     const RunControl& control) {
  check_start(f, x0);
  check_lipschitz(lipschitz);
  const std::size_t n = f.dim();
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> g(n);
  RunMonitor monitor(&f, "gm", 0, control);
  monitor.record(x);
  SolveResult out;
  for (std::uint64_t k = 0; k < iterations && !monitor.should_stop(); ++k) {
    f.gradient(x, g);
    for (std::size_t i = 0; i < n; ++i) x[i] -= g[i] / lipschitz;
    monitor.charge(n);
    ++out.iterations;
    monitor.checkpoint(x);
  }
  out.coordinate_ops = monitor.ops();
  out.trace = monitor.finish(x);
  out.x = std::move(x);
  return out;
}

SolveResult fgm_solve(const Objective& f, std::span<const double> x0, double lipschitz, std::uint64_t iterations,
                      const RunControl& control) {
  check_start(f, x0);
  check_lipschitz(lipschitz);
  const std::size_t n = f.dim();
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> y = x;
  std::vector<double> x_next(n);
  std::vector<double> g(n);
  double t = 1.0;
  RunMonitor monitor(&f, "fgm", 0, control);
  monitor.record(x);
  SolveResult out;
  for (std::uint64_t k = 0; k < iterations && !monitor.should_stop(); ++k) {
    f.gradient(y, g);
    for (std::size_t i = 0; i < n; ++i) x_next[i] = y[i] - g[i] / lipschitz;
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    const double momentum = (t - 1.0) / t_next;
    for (std::size_t i = 0; i < n; ++i) y[i] = x_next[i] + momentum * (x_next[i] - x[i]);
    x.swap(x_next);
    t = t_next;
    monitor.charge(n);
    ++out.iterations;
    monitor.checkpoint(x);
  }
  out.coordinate_ops = monitor.ops();
  out.trace = monitor.finish(x);
  out.x = std::move(x);
  return out;
}

SolveResult plain_cdm_solve(const Objective& f, std::span<const double> x0, std::span<const double> coordinate_lipschitz,
                            std::uint64_t iterations, std::uint64_t seed, const RunControl& control) {
  check_start(f, x0);
  if (coordinate_lipschitz.size() != f.dim()) throw InvalidInput("cdm: constants have wrong length");
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < coordinate_lipschitz.size(); ++i) {
    if (coordinate_lipschitz[i] > 0.0) active.push_back(i);
  }
  const std::unique_ptr<CoordinateState> state = f.coordinate_state(x0);
  RunMonitor monitor(&f, "cdm", seed, control);
  monitor.record(state->point());
  SolveResult out;
  if (!active.empty()) {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, active.size() - 1);
    for (std::uint64_t k = 0; k < iterations && !monitor.should_stop(); ++k) {
      const std::size_t i = active[pick(rng)];
      state->step(i, -state->partial(i) / coordinate_lipschitz[i]);
      monitor.charge(1);
      ++out.iterations;
      monitor.checkpoint(state->point());
    }
  }
  const auto x = state->point();
  out.coordinate_ops = monitor.ops();
  out.trace = monitor.finish(x);
  out.x.assign(x.begin(), x.end());
  return out;
}

SolveResult acdm_solve(const Objective& f, std::span<const double> x0, std::span<const double> coordinate_lipschitz,
                       std::uint64_t iterations, std::uint64_t seed, const RunControl& control) {
  check_start(f, x0);
  if (coordinate_lipschitz.size() != f.dim()) throw InvalidInput("acdm: constants have wrong length");
  std::vector<double> root(coordinate_lipschitz.size());
  double s = 0.0;
  for (std::size_t i = 0; i < root.size(); ++i) {
    if (coordinate_lipschitz[i] < 0.0) throw InvalidInput("acdm: negative component constant");
    root[i] = std::sqrt(coordinate_lipschitz[i]);
    s += root[i];
  }
  const std::unique_ptr<CoupledState> state = f.coupled_state(x0);
  RunMonitor monitor(&f, "acdm", seed, control);
  monitor.record(state->x());
  SolveResult out;
  if (s > 0.0) {
    Rng rng(seed);
    std::discrete_distribution<std::size_t> pick(root.begin(), root.end());
    const double s2 = s * s;
    const double cost = f.coupled_step_cost();
    double owed = 0.0;
    double a_sum = 0.0;
    for (std::uint64_t k = 0; k < iterations && !monitor.should_stop(); ++k) {
      const double a = (1.0 + std::sqrt(1.0 + 4.0 * s2 * a_sum)) / (2.0 * s2);
      a_sum += a;
      state->couple(a / a_sum);
      const std::size_t i = pick(rng);
      const double g = state->partial_at_y(i);
      const double p = root[i] / s;
      state->set_x_from_y(i, -g / coordinate_lipschitz[i]);
      state->step_v(i, -a * g / p);
      owed += cost;
      const auto whole = static_cast<std::uint64_t>(owed);
      monitor.charge(whole);
      owed -= static_cast<double>(whole);
      ++out.iterations;
      monitor.checkpoint(state->x());
    }
  }
  const auto x = state->x();
  out.coordinate_ops = monitor.ops();
  out.trace = monitor.finish(x);
  out.x.assign(x.begin(), x.end());
  return out;
}

}  // namespace ccdm
