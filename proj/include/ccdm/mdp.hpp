#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ccdm/objective.hpp"
#include "ccdm/solvers.hpp"
#include "ccdm/sparse_matrix.hpp"
#include "ccdm/trace.hpp"

namespace ccdm {

/// Finite MDP. Actions are numbered globally; state i owns rows
/// action_offsets[i] .. action_offsets[i+1]-1 of `transitions` (m x n).
struct MdpInstance {
  std::size_t states = 0;
  std::vector<std::size_t> action_offsets{0};
  SparseMatrix transitions;
  std::vector<double> rewards;
  double gamma = 1.0;
  std::vector<double> initial;

  std::size_t actions() const noexcept { return rewards.size(); }
  std::size_t actions_of(std::size_t state) const { return action_offsets[state + 1] - action_offsets[state]; }

  /// Throws InvalidInput unless every row is a probability distribution
  /// (row sums 1 +- 1e-12), rewards lie in [0, 1], `initial` is on the
  /// simplex, gamma is in (0, 1] and every state owns at least one action.
  void validate() const;
};

enum class MdpKind { Average, Discounted };

MdpKind parse_mdp_kind(const std::string& s);

/// Per-state action distributions.
using Policy = std::vector<std::vector<double>>;

/// Smoothed minimax reduction. The objective is
///   sigma ln sum_j exp(([A v]_j + r_j) / sigma) - sigma ln m + <b, v>
/// with A = gamma P - I_hat, b = (1 - gamma) q (zero for AMDP) and
/// sigma = eps_opt / (2 ln m).
///
/// For AMDP the value of state 0 is pinned to zero (rows of A sum to zero,
/// so v is only defined up to a constant) and the objective's variables are
/// v_1 .. v_{n-1}; expand() restores the full vector.
struct ReducedProblem {
  SoftMaxObjective objective;
  double sigma = 0.0;
  double eps_opt = 0.0;
  double gamma = 1.0;
  MdpKind kind = MdpKind::Discounted;
  std::size_t states = 0;
  std::vector<std::size_t> action_offsets;
  bool pinned = false;

  std::vector<double> expand(std::span<const double> reduced) const;
  std::vector<double> restrict(std::span<const double> full) const;
};

/// eps_tilde / 6 for AMDP, (1 - gamma) eps_tilde / 6 for DMDP; a DMDP with
/// gamma = 1 is mapped like an AMDP.
double accuracy_map(double eps_tilde, double gamma, MdpKind kind);

/// The full matrix gamma P - I_hat for a given discount.
SparseMatrix mdp_constraint_matrix(const MdpInstance& mdp, double gamma);

/// Throws InvalidInput if m < 2 or the instance is malformed. AMDP uses
/// gamma = 1 whatever the instance's discount.
ReducedProblem build_reduced(const MdpInstance& mdp, double eps_tilde, MdpKind kind);

/// max_j ([A v]_j + r_j) + <b, v>, the unsmoothed minimax objective.
double exact_minimax_value(const ReducedProblem& red, std::span<const double> v);

/// (f_sigma(v), f_sigma(v) + sigma ln m). The exact minimax objective lies
/// in between.
std::pair<double, double> smoothed_value_bounds(const ReducedProblem& red, std::span<const double> v);

/// pi_i(a) proportional to exp(([A v]_{(i,a)} + r_{(i,a)}) / sigma) within
/// each state; with `greedy` all mass goes to the best-scoring action.
Policy extract_policy(const ReducedProblem& red, std::span<const double> v, bool greedy = false);

/// Upper bound on f_sigma(v) - min f_sigma from the dual point given by the
/// occupancy measure of extract_policy(red, v): discounted occupancy for
/// DMDP, stationary distribution for AMDP. That measure satisfies
/// A^T mu + b = 0, so f_sigma >= mu^T r - sigma sum mu ln(m mu) everywhere.
/// Returns +inf when the measure cannot be computed to 1e-12 feasibility
/// (e.g. a multichain AMDP policy).
double duality_gap(const ReducedProblem& red, const MdpInstance& mdp, std::span<const double> v);

struct ValueIterationResult {
  std::vector<double> values;  // v* (DMDP) or a bias vector with v_0 = 0 (AMDP)
  Policy policy;               // greedy, deterministic
  double value = 0.0;          // q^T v* (DMDP) or the optimal gain (AMDP)
  std::uint64_t iterations = 0;
};

/// DMDP: plain value iteration until the sup-norm error bound is <= tol.
/// AMDP: relative value iteration on the aperiodic transform
/// (P + I) / 2 until the span of the Bellman residual is <= tol.
/// Throws std::runtime_error when `max_iterations` is hit.
ValueIterationResult value_iteration(const MdpInstance& mdp, MdpKind kind, double tol,
                                     std::uint64_t max_iterations = 10'000'000);

/// Expected return of a policy: q^T v^pi (DMDP) or its gain (AMDP).
double evaluate_policy(const MdpInstance& mdp, MdpKind kind, const Policy& policy, double tol = 1e-12);

/// Random instance: each action row moves to `support` distinct states with
/// Dirichlet(1) probabilities, rewards U[0, 1], q uniform.
MdpInstance random_mdp(std::size_t states, std::size_t actions_per_state, std::size_t support, std::uint64_t seed,
                       double gamma = 0.9);

struct MdpSolveOptions {
  std::uint64_t seed = 0;
  /// ||v0 - v*||^2 estimate for the outer budget. Default: n / (1 - gamma)^2
  /// for DMDP (values lie in [0, 1/(1-gamma)]), n for AMDP.
  std::optional<double> r2;
  std::optional<std::uint64_t> outer;
  std::uint64_t check_every = 0;
  /// Evaluate duality_gap every this many outer iterations and stop once it
  /// is <= eps_opt; 0 runs the full outer budget.
  std::uint64_t certify_every = 100;
  /// Sees every outer iterate (reduced coordinates); true ends the run.
  MetaObserver observer;
  bool greedy = false;
  RunControl control;
};

struct MdpSolution {
  std::vector<double> values;  // full-length v
  Policy policy;
  double eps_opt = 0.0;
  double sigma = 0.0;
  std::uint64_t outer = 0;  // budgeted outer iterations
  std::uint64_t inner = 0;
  std::uint64_t outer_run = 0;  // outer iterations actually run
  double gap = 0.0;  // last computed duality gap (+inf if never computed)
  bool certified = false;
  ConvergenceTrace trace;
};

/// Builds the reduced problem and minimizes it with Catalyst CDM from v = 0,
/// for the outer budget of eps_opt and r2 or until the duality gap
/// certifies eps_opt.
MdpSolution solve_mdp(const MdpInstance& mdp, MdpKind kind, double eps_tilde, const MdpSolveOptions& options);

// JSON: {n, actions: [counts], transitions: [[action_row, state, prob], ...],
//        rewards: [...], gamma, q}
MdpInstance read_mdp_json_file(const std::string& path);
void write_mdp_json_file(const std::string& path, const MdpInstance& mdp);
void write_policy_json_file(const std::string& path, const Policy& policy);

}  // namespace ccdm
