#include "ccdm/budget.hpp"

#include <cmath>
#include <algorithm>
#include <numeric>
#include <string>

#include "ccdm/error.hpp"

namespace ccdm {

namespace {

// Ceiling that forgives representation error on values that are integers
// in exact arithmetic.
std::uint64_t ceil_count(double x) {
  if (!std::isfinite(x) || x > 9.0e18) throw InvalidInput("iteration budget overflows");
  const double snapped = std::nearbyint(x);
  if (std::abs(x - snapped) <= 1e-12 * std::max(1.0, std::abs(x))) x = snapped;
  return static_cast<std::uint64_t>(std::max(0.0, std::ceil(x)));
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(std::string(name) + " must be positive and finite");
}

double condition_factor(double h, double l) {
  const double ratio = l / h;
  return (1.0 + ratio) * (3.0 + 2.0 * ratio) * (3.0 + 2.0 * ratio);
}

}  // namespace

std::uint64_t inner_budget_fixed(double z, double h, double l) {
  require_positive(z, "Z");
  require_positive(h, "H");
  require_positive(l, "L");
  return ceil_count(z / h * std::log(condition_factor(h, l)));
}

std::uint64_t inner_budget_prob(double z, double h, double l, std::uint64_t outer, double delta) {
  require_positive(z, "Z");
  require_positive(h, "H");
  require_positive(l, "L");
  if (outer == 0) throw InvalidInput("outer iteration count must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
  return ceil_count(z / h * std::log(static_cast<double>(outer) / delta * condition_factor(h, l)));
}

std::uint64_t outer_budget(double h, double r2, double eps) {
  require_positive(h, "H");
  require_positive(r2, "R^2");
  require_positive(eps, "epsilon");
  return ceil_count(4.0 * std::sqrt(15.0) / 5.0 * std::sqrt(h * r2 / eps));
}

double choose_h(std::span<const double> coordinate_lipschitz) {
  if (coordinate_lipschitz.empty()) throw InvalidInput("choose_h: no component constants");
  double sum = 0.0;
  for (double l : coordinate_lipschitz) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidInput("choose_h: constants must be finite and >= 0");
    sum += l;
  }
  if (sum == 0.0) throw InvalidInput("choose_h: all component constants are zero");
  return sum / static_cast<double>(coordinate_lipschitz.size());
}

SolverBudget make_budget(const Smoothness& s, const BudgetRequest& request) {
  SolverBudget b;
  b.h = request.h ? *request.h : choose_h(s.coordinate);
  require_positive(b.h, "H");
  b.lambda = 1.0 / (2.0 * b.h);
  b.lipschitz = s.lipschitz;
  b.z = 0.0;
  for (double l : s.coordinate) b.z += b.h + l;
  b.kappa = b.z / b.h;
  b.epsilon = request.epsilon.value_or(0.0);
  b.delta = request.delta.value_or(0.0);

  if (request.epsilon && request.r2 && *request.r2 > 0.0) {
    b.outer = outer_budget(b.h, *request.r2, *request.epsilon);
  } else {
    b.outer = request.outer.value_or(1);
  }
  if (b.outer == 0) throw InvalidInput("outer iteration count must be positive");

  // A zero full-gradient constant only happens for f linear; any positive
  // floor keeps the formula finite there.
  const double l = s.lipschitz > 0.0 ? s.lipschitz : b.h * 1e-12;
  if (request.inner) {
    b.inner = *request.inner;
  } else if (request.delta) {
    b.inner = inner_budget_prob(b.z, b.h, l, b.outer, *request.delta);
  } else {
    b.inner = inner_budget_fixed(b.z, b.h, l);
  }
  return b;
}

}  // namespace ccdm
