#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ccdm/objective.hpp"
#include "ccdm/solvers.hpp"
#include "ccdm/sparse_matrix.hpp"
#include "ccdm/trace.hpp"

namespace ccdm {

// --- instance generators -----------------------------------------------------

/// Generated SoftMax data. b = -A^T p where p (`weights`) is a random point
/// in the interior of the simplex, so the objective is bounded below and,
/// when A has full row rank, its minimum is gamma * entropy(p).
struct Instance {
  SparseMatrix a;
  std::vector<double> b;
  std::vector<double> weights;
};

/// Every entry independently 1 with probability `density`, else 0.
Instance gen_uniform(Index m, Index n, double density, std::uint64_t seed);

/// Row 0 all ones; of the other rows floor(0.9 m) carry floor(0.1 n) ones
/// and the rest floor(0.9 n) ones, positions uniform, row order shuffled.
Instance gen_hetero(Index m, Index n, std::uint64_t seed);

/// m = n / 2 rows; row 0 all ones and every column gets `per_column` more
/// ones in distinct random rows. Column sparsity stays fixed as n grows.
/// Instead of a random interior p, b is planted: p = softmax(A x_p) for a
/// zero-sum x_p with ||x_p|| = radius, so gamma * x_p is a minimizer for
/// every gamma and ||x0 - x*|| does not grow with n.
Instance gen_colsparse(Index n, Index per_column, std::uint64_t seed, double radius = 10.0);

/// gamma * entropy(weights); the minimum whenever A has full row rank, and
/// always for gen_colsparse.
double analytic_minimum(const Instance& instance, double gamma);

// --- objective files ---------------------------------------------------------

/// {"matrix": "matrix.mtx", "b": "b.txt" | [..], "r": "r.txt" | [..],
///  "gamma": g, "c": c}. Relative paths resolve against the JSON file.
SoftMaxObjective read_objective_json_file(const std::filesystem::path& path);

/// Writes matrix.mtx, b.txt, r.txt (when r is nonzero) and objective.json
/// into `dir`; returns the path of objective.json.
std::filesystem::path write_objective_files(const std::filesystem::path& dir, const SoftMaxObjective& f);

std::vector<double> read_vector_file(const std::filesystem::path& path);
void write_vector_file(const std::filesystem::path& path, const std::vector<double>& v);

/// FNV-1a over dimensions, entries, b, r, gamma and c.
std::uint64_t instance_hash(const SoftMaxObjective& f);

// --- optimum estimation ------------------------------------------------------

struct FstarOptions {
  std::uint64_t max_iterations = 2'000'000;
  /// Directory for cached values keyed by instance_hash; none disables it.
  std::optional<std::filesystem::path> cache_dir;
};

struct FstarResult {
  double value = 0.0;
  double certified_gap = 0.0;  // bound on value - f* at the returned point
  std::uint64_t iterations = 0;
  bool from_cache = false;
};

/// Fast gradient method with adaptive restart from x = 0, stopped when
/// ||grad f(x)|| * (2 ||x - x0|| + 1) <= accuracy. Convexity gives
/// f(x) - f* <= ||grad f(x)|| ||x - x*||; the distance factor is an estimate
/// of ||x - x*|| (exact for x* = x0 and for separable quadratics once the
/// iterate has passed the midpoint). Throws BudgetExhausted with the best
/// value seen when max_iterations runs out.
FstarResult compute_fstar(const Objective& f, double accuracy, const FstarOptions& options = {});
/// Same, with the on-disk cache. A cached entry is reused when it was
/// computed at the same or a tighter accuracy.
FstarResult compute_fstar(const SoftMaxObjective& f, double accuracy, const FstarOptions& options = {});

// --- solver front end --------------------------------------------------------

enum class Method { GM, FGM, CDM, ACDM, CCDM };

Method parse_method(const std::string& s);
std::string method_name(Method m);

struct MethodOptions {
  std::uint64_t seed = 0;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<double> r2;
  std::optional<double> h;
  std::uint64_t check_every = 0;
  RunControl control;
};

struct MethodRun {
  SolveResult result;
  /// Set for CCDM only.
  std::optional<SolverBudget> budget;
};

/// Runs one method from x = 0. Baselines run until `control` stops them.
/// CCDM takes its outer count from epsilon and r2 when both are known and
/// otherwise iterates until `control` stops it; its inner count follows
/// make_budget.
MethodRun run_method(Method method, const SoftMaxObjective& f, const MethodOptions& options);

/// {method, seed, H, N_outer, N_inner, epsilon, delta} plus run totals.
void write_run_metadata(const std::filesystem::path& path, Method method, const MethodOptions& options,
                        const MethodRun& run);

// --- benchmark harness -------------------------------------------------------

struct InstanceSpec {
  std::string kind;  // uniform | hetero | colsparse | file
  Index m = 0;
  Index n = 0;
  double density = 0.2;
  Index per_column = 8;
  double radius = 10.0;
  std::uint64_t seed = 0;
  std::filesystem::path objective_file;  // kind == file
};

struct BenchConfig {
  InstanceSpec instance;
  double gamma = 1.0;
  std::vector<Method> methods;
  double time_budget_seconds = 60.0;
  std::optional<std::uint64_t> max_ops;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<double> r2;
  std::uint64_t check_every = 0;
  std::uint64_t seed = 0;
  double fstar_accuracy = 1e-10;
  /// Stop each run once f - f* <= target_residual * (f(0) - f*).
  std::optional<double> target_residual;
  /// Stop each run once f - f* <= target_gap (absolute). With both set the
  /// larger threshold wins.
  std::optional<double> target_gap;
  double trace_factor = 1.3;
  /// false lets methods run concurrently; wall times then interfere.
  bool sequential = true;
  std::optional<std::filesystem::path> fstar_cache;
  std::filesystem::path output_dir;

  /// Throws InvalidInput on an empty method list or non-positive budgets.
  void validate() const;
};

BenchConfig read_bench_config_file(const std::filesystem::path& path);
void write_bench_config_file(const std::filesystem::path& path, const BenchConfig& config);

/// Builds the objective described by config.instance and config.gamma.
SoftMaxObjective make_bench_objective(const BenchConfig& config);

struct MethodOutcome {
  Method method;
  std::optional<ConvergenceTrace> trace;
  std::string error;  // non-empty when the run failed
};

struct BenchReport {
  double fstar = 0.0;
  double f0 = 0.0;
  std::vector<MethodOutcome> outcomes;
};

/// Writes config.json, the instance, fstar.json and per method
/// trace_<method>.csv with a trace_<method>.json sidecar under
/// config.output_dir. A failing method leaves an error in its sidecar and
/// the others still run.
BenchReport run_benchmark(const BenchConfig& config);

}  // namespace ccdm
