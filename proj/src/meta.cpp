#include "ccdm/solvers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ccdm/error.hpp"

namespace ccdm {

SolveResult meta_solve(const Objective& f, std::span<const double> x0, const SolverBudget& budget,
                       const InnerSolver& inner, const RunControl& control, const MetaObserver& observer) {
  const std::size_t n = f.dim();
  if (x0.size() != n) throw InvalidInput("meta_solve: starting point has wrong length");
  if (!(budget.h > 0.0) || budget.outer == 0) throw InvalidInput("meta_solve: invalid budget");

  const double h = budget.h;
  const double lambda = 1.0 / (2.0 * h);
  double a_sum = 0.0;
  std::vector<double> x(x0.begin(), x0.end());
  std::vector<double> v = x;
  std::vector<double> x_tilde(n);
  std::vector<double> grad(n);

  RunMonitor monitor(&f, "ccdm", 0, control);
  monitor.record(v);
  SolveResult result;
  for (std::uint64_t k = 0; k < budget.outer && !monitor.should_stop(); ++k) {
    const double a = (lambda + std::sqrt(lambda * lambda + 4.0 * lambda * a_sum)) / 2.0;
    const double a_prev = a_sum;
    a_sum += a;
    for (std::size_t i = 0; i < n; ++i) x_tilde[i] = (a_prev * v[i] + a * x[i]) / a_sum;

    const ProxProblem prox(f, x_tilde, h);
    InnerResult step = inner(prox, x_tilde);
    if (step.y.size() != n) throw std::runtime_error("meta_solve: inner solver returned a point of wrong length");
    for (double t : step.y) {
      if (!std::isfinite(t)) {
        throw std::runtime_error("meta_solve: inner solver diverged at outer iteration " + std::to_string(k + 1));
      }
    }
    v = std::move(step.y);

    f.gradient(v, grad);
    for (std::size_t i = 0; i < n; ++i) x[i] -= a * grad[i];

    monitor.charge(step.coordinate_ops + n);
    ++result.iterations;
    const bool stop = observer && observer(MetaIterate{k + 1, a, a_sum, lambda, x, v, x_tilde});
    monitor.checkpoint(v);
    if (stop) break;
  }
  result.coordinate_ops = monitor.ops();
  result.trace = monitor.finish(v);
  result.x = std::move(v);
  return result;
}

SolveResult catalyst_cdm_solve(const Objective& f, std::span<const double> x0, const SolverBudget& budget,
                               std::uint64_t seed, const RunControl& control, std::uint64_t check_every) {
  SolveResult r = meta_solve(f, x0, budget, cdm_inner(budget.inner, seed, check_every), control);
  r.trace.seed = seed;
  return r;
}

}  // namespace ccdm
