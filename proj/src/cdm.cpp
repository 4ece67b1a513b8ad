#include "ccdm/solvers.hpp"

#include <cmath>
#include <memory>

#include "ccdm/error.hpp"

namespace ccdm {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double t : v) s += t * t;
  return std::sqrt(s);
}

// Sampling law and step sizes of the prox coordinate descent for fixed H.
struct ProxCoordinates {
  std::vector<double> step_scale;  // H + L_i
  std::discrete_distribution<std::size_t> law;

  ProxCoordinates(std::span<const double> lipschitz, double h) {
    step_scale.reserve(lipschitz.size());
    for (double l : lipschitz) step_scale.push_back(h + l);
    law = std::discrete_distribution<std::size_t>(step_scale.begin(), step_scale.end());
  }
};

CdmResult run_cdm(const ProxProblem& p, std::span<const double> y0, std::uint64_t iterations, Rng& rng,
                  std::uint64_t check_every, ProxCoordinates& coords, const CdmStepHook& on_step = {}) {
  if (y0.size() != p.dim()) throw InvalidInput("cdm: starting point has wrong length");
  CdmResult out;
  const std::unique_ptr<CoordinateState> state = p.objective().coordinate_state(y0);
  for (std::uint64_t k = 0; k < iterations; ++k) {
    const std::size_t i = coords.law(rng);
    const double g = p.partial(*state, i);
    state->step(i, -g / coords.step_scale[i]);
    ++out.steps;
    if (on_step) on_step(out.steps, i, state->point()[i]);
    if (check_every > 0 && out.steps % check_every == 0) {
      ++out.condition_checks;
      if (check_stop_condition(p, state->point())) {
        out.stopped_by_condition = true;
        break;
      }
    }
  }
  const auto y = state->point();
  out.y.assign(y.begin(), y.end());
  return out;
}

}  // namespace

bool check_stop_condition(const ProxProblem& p, std::span<const double> y) {
  const std::vector<double> g = p.gradient(y);
  std::vector<double> d(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) d[i] = y[i] - p.center()[i];
  return norm2(g) <= 0.5 * p.h() * norm2(d);
}

CdmResult cdm_solve(const ProxProblem& p, std::span<const double> y0, std::uint64_t iterations, Rng& rng,
                    std::uint64_t check_every, const CdmStepHook& on_step) {
  ProxCoordinates coords(p.objective().smoothness().coordinate, p.h());
  return run_cdm(p, y0, iterations, rng, check_every, coords, on_step);
}

CdmResult cdm_solve(const ProxProblem& p, std::span<const double> y0, std::uint64_t iterations,
                    std::uint64_t seed, std::uint64_t check_every) {
  Rng rng(seed);
  return cdm_solve(p, y0, iterations, rng, check_every);
}

InnerSolver cdm_inner(std::uint64_t iterations, std::uint64_t seed, std::uint64_t check_every) {
  struct Shared {
    Rng rng;
    const Objective* objective = nullptr;
    double h = 0.0;
    std::unique_ptr<ProxCoordinates> coords;
  };
  auto shared = std::make_shared<Shared>();
  shared->rng.seed(seed);
  return [shared, iterations, check_every](const ProxProblem& p, std::span<const double> warm_start) {
    if (!shared->coords || shared->objective != &p.objective() || shared->h != p.h()) {
      shared->coords = std::make_unique<ProxCoordinates>(p.objective().smoothness().coordinate, p.h());
      shared->objective = &p.objective();
      shared->h = p.h();
    }
    CdmResult r = run_cdm(p, warm_start, iterations, shared->rng, check_every, *shared->coords);
    // Building the cache at the warm start costs one full product; every
    // condition check costs one full gradient.
    const std::uint64_t n = p.dim();
    return InnerResult{std::move(r.y), r.steps + n + r.condition_checks * n};
  };
}

InnerSolver exact_quadratic_inner(const QuadraticObjective& f) {
  return [&f](const ProxProblem& p, std::span<const double>) {
    return InnerResult{f.prox(p.center(), p.h()), p.dim()};
  };
}

}  // namespace ccdm
