#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "ccdm/budget.hpp"
#include "ccdm/objective.hpp"
#include "ccdm/trace.hpp"

namespace ccdm {

/// Every randomized solver draws from this generator, seeded from the run
/// seed. Same seed and budget give bitwise-identical iterates.
using Rng = std::mt19937_64;

struct SolveResult {
  std::vector<double> x;
  ConvergenceTrace trace;
  std::uint64_t iterations = 0;
  std::uint64_t coordinate_ops = 0;
};

// --- inner coordinate descent ------------------------------------------------

struct CdmResult {
  std::vector<double> y;
  std::uint64_t steps = 0;
  std::uint64_t condition_checks = 0;
  bool stopped_by_condition = false;
};

/// Coordinate descent on a prox problem: N steps, coordinate i drawn with
/// probability (H + L_i) / Z, step -partial_i F / (H + L_i).
///
/// With check_every > 0 the inexact-prox condition
/// ||grad F(y)|| <= (H/2) ||y - center|| is evaluated every check_every steps
/// (one full gradient each) and the run ends early once it holds.
///
/// `on_step`, if set, sees every step as (step count, coordinate, new y_i).
using CdmStepHook = std::function<void(std::uint64_t step, std::size_t i, double y_i)>;
CdmResult cdm_solve(const ProxProblem& p, std::span<const double> y0, std::uint64_t iterations, Rng& rng,
                    std::uint64_t check_every = 0, const CdmStepHook& on_step = {});
CdmResult cdm_solve(const ProxProblem& p, std::span<const double> y0, std::uint64_t iterations,
                    std::uint64_t seed, std::uint64_t check_every = 0);

/// ||grad F(y)||_2 <= (H/2) ||y - center||_2.
bool check_stop_condition(const ProxProblem& p, std::span<const double> y);

// --- accelerated meta-algorithm ----------------------------------------------

struct InnerResult {
  std::vector<double> y;
  std::uint64_t coordinate_ops = 0;
};

/// Approximately solves a prox problem starting from `warm_start`.
using InnerSolver = std::function<InnerResult(const ProxProblem&, std::span<const double> warm_start)>;

/// Coordinate descent with a fixed step count; one generator shared by all
/// calls so the whole outer run is reproducible from `seed`.
InnerSolver cdm_inner(std::uint64_t iterations, std::uint64_t seed, std::uint64_t check_every = 0);
/// Analytic prox for the separable quadratic test objective.
InnerSolver exact_quadratic_inner(const QuadraticObjective& f);

/// Snapshot after outer iteration k (k counts from 1). An observer returning
/// true ends the run after that iteration.
struct MetaIterate {
  std::uint64_t k = 0;
  double a = 0.0;       // a_k
  double a_sum = 0.0;   // A_k
  double lambda = 0.0;
  std::span<const double> x;
  std::span<const double> v;
  std::span<const double> x_tilde;  // extrapolation point used at this step
};
using MetaObserver = std::function<bool(const MetaIterate&)>;

/// Accelerated proximal envelope: `budget.outer` iterations of
///   a = (lambda + sqrt(lambda^2 + 4 lambda A)) / 2,  A += a,
///   x~ = (A_prev v + a x) / A,  v = inner(F centered at x~, warm start x~),
///   x -= a grad f(v),
/// returning the last v. Throws std::runtime_error if the inner solver
/// returns a non-finite point.
SolveResult meta_solve(const Objective& f, std::span<const double> x0, const SolverBudget& budget,
                       const InnerSolver& inner, const RunControl& control = {},
                       const MetaObserver& observer = {});

/// Catalyst CDM: meta_solve with cdm_inner(budget.inner, seed, check_every).
SolveResult catalyst_cdm_solve(const Objective& f, std::span<const double> x0, const SolverBudget& budget,
                               std::uint64_t seed, const RunControl& control = {},
                               std::uint64_t check_every = 0);

// --- baselines ---------------------------------------------------------------

/// x <- x - grad f(x) / L.
SolveResult gm_solve(const Objective& f, std::span<const double> x0, double lipschitz, std::uint64_t iterations,
                     const RunControl& control = {});

/// Two-sequence fast gradient method with constant step 1/L:
///   x+ = y - grad f(y) / L,  t+ = (1 + sqrt(1 + 4 t^2)) / 2,
///   y+ = x+ + ((t - 1) / t+) (x+ - x).
SolveResult fgm_solve(const Objective& f, std::span<const double> x0, double lipschitz, std::uint64_t iterations,
                      const RunControl& control = {});

/// Uniform coordinate descent with step 1/L_i; coordinates with L_i = 0 are
/// never sampled.
SolveResult plain_cdm_solve(const Objective& f, std::span<const double> x0, std::span<const double> coordinate_lipschitz,
                            std::uint64_t iterations, std::uint64_t seed, const RunControl& control = {});

/// Accelerated coordinate descent with sampling p_i = sqrt(L_i) / S,
/// S = sum sqrt(L_j):
///   a solves S^2 a^2 = A + a,  A += a,  tau = a / A,
///   y = tau v + (1 - tau) x,  x = y - partial_i f(y) / L_i e_i,
///   v_i -= a partial_i f(y) / p_i.
/// Every iteration rewrites dense vectors, so it is charged
/// Objective::coupled_step_cost() coordinate ops.
SolveResult acdm_solve(const Objective& f, std::span<const double> x0, std::span<const double> coordinate_lipschitz,
                       std::uint64_t iterations, std::uint64_t seed, const RunControl& control = {});

}  // namespace ccdm
