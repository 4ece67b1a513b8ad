#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "ccdm/objective.hpp"

namespace ccdm {

/// Parameters of one Catalyst CDM run.
struct SolverBudget {
  double h = 0.0;
  double lambda = 0.0;  // 1 / (2H)
  std::uint64_t outer = 0;
  std::uint64_t inner = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double z = 0.0;      // sum_i (H + L_i)
  double kappa = 0.0;  // Z / H; the inner method contracts by (1 - 1/kappa) per step
  double lipschitz = 0.0;
};

/// Inner iterations sufficient for the inexact-prox condition in
/// expectation: ceil((Z/H) ln((1 + L/H)(3 + 2L/H)^2)).
std::uint64_t inner_budget_fixed(double z, double h, double l);

/// High-probability inner budget over `outer` outer iterations:
/// ceil((Z/H) ln((outer/delta)(1 + L/H)(3 + 2L/H)^2)).
std::uint64_t inner_budget_prob(double z, double h, double l, std::uint64_t outer, double delta);

/// Outer iterations for accuracy eps: ceil((4 sqrt(15) / 5) sqrt(H R^2 / eps)).
std::uint64_t outer_budget(double h, double r2, double eps);

/// H = mean of the component constants. Throws on empty or all-zero input.
double choose_h(std::span<const double> coordinate_lipschitz);

struct BudgetRequest {
  std::optional<double> h;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<double> r2;
  std::optional<std::uint64_t> outer;
  std::optional<std::uint64_t> inner;
};

/// Assembles a budget: H from choose_h unless given; the outer count from
/// outer_budget when epsilon and r2 are known (else `outer`, else 1); the
/// inner count from inner_budget_prob when delta is given, otherwise
/// inner_budget_fixed.
SolverBudget make_budget(const Smoothness& s, const BudgetRequest& request);

}  // namespace ccdm
