#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ccdm/bench.hpp"
#include "ccdm/error.hpp"
#include "ccdm/mdp.hpp"

namespace fs = std::filesystem;

namespace {

int generate(const std::string& kind, ccdm::Index m, ccdm::Index n, double density, ccdm::Index per_column,
             double gamma, std::uint64_t seed, const fs::path& out) {
  ccdm::Instance inst;
  if (kind == "uniform") {
    inst = ccdm::gen_uniform(m, n, density, seed);
  } else if (kind == "hetero") {
    inst = ccdm::gen_hetero(m, n, seed);
  } else if (kind == "colsparse") {
    inst = ccdm::gen_colsparse(n, per_column, seed);
  } else {
    throw ccdm::InvalidInput("unknown kind '" + kind + "'");
  }
  const ccdm::SoftMaxObjective f(std::move(inst.a), std::move(inst.b), gamma);
  std::cout << ccdm::write_objective_files(out, f).string() << '\n';
  return 0;
}

int solve(const fs::path& objective, const std::string& method_name, const ccdm::MethodOptions& options,
          const fs::path& out) {
  const ccdm::Method method = ccdm::parse_method(method_name);
  const ccdm::SoftMaxObjective f = ccdm::read_objective_json_file(objective);
  const ccdm::MethodRun run = ccdm::run_method(method, f, options);
  fs::create_directories(out);
  ccdm::write_trace_csv_file((out / "trace.csv").string(), run.result.trace);
  ccdm::write_run_metadata(out / "metadata.json", method, options, run);
  ccdm::write_vector_file(out / "x.txt", run.result.x);
  if (!run.result.trace.events.empty()) {
    std::printf("%s f=%.12g ops=%llu\n", method_name.c_str(), run.result.trace.events.back().f_value,
                static_cast<unsigned long long>(run.result.coordinate_ops));
  }
  return 0;
}

int mdp_solve(const fs::path& file, const std::string& kind, double eps_policy, std::uint64_t seed,
              const fs::path& out) {
  const ccdm::MdpInstance mdp = ccdm::read_mdp_json_file(file.string());
  ccdm::MdpSolveOptions options;
  options.seed = seed;
  const ccdm::MdpSolution sol = ccdm::solve_mdp(mdp, ccdm::parse_mdp_kind(kind), eps_policy, options);
  fs::create_directories(out);
  ccdm::write_policy_json_file((out / "policy.json").string(), sol.policy);
  ccdm::write_vector_file(out / "values.txt", sol.values);
  ccdm::write_trace_csv_file((out / "trace.csv").string(), sol.trace);
  nlohmann::json j;
  j["kind"] = kind;
  j["eps_policy"] = eps_policy;
  j["eps_opt"] = sol.eps_opt;
  j["sigma"] = sol.sigma;
  j["N_outer"] = sol.outer;
  j["N_inner"] = sol.inner;
  j["seed"] = seed;
  std::ofstream(out / "metadata.json") << j.dump(1) << '\n';
  return 0;
}

int bench(const fs::path& config_file, const std::optional<fs::path>& out, bool concurrent) {
  ccdm::BenchConfig config = ccdm::read_bench_config_file(config_file);
  if (out) config.output_dir = *out;
  if (concurrent) config.sequential = false;
  const ccdm::BenchReport report = ccdm::run_benchmark(config);
  std::printf("f* = %.15g  f(0) = %.15g\n", report.fstar, report.f0);
  int failed = 0;
  for (const auto& o : report.outcomes) {
    if (!o.error.empty()) {
      ++failed;
      std::printf("%-5s failed: %s\n", ccdm::method_name(o.method).c_str(), o.error.c_str());
    } else if (!o.trace->events.empty()) {
      const auto& e = o.trace->events.back();
      std::printf("%-5s ops=%llu  t=%.3fs  f-f*=%.3e\n", ccdm::method_name(o.method).c_str(),
                  static_cast<unsigned long long>(e.coordinate_ops), e.wall_seconds, e.f_value - report.fstar);
    }
  }
  return failed == 0 ? 0 : 1;
}

int fstar(const fs::path& objective, double accuracy, const fs::path& out, const std::optional<fs::path>& cache,
          std::uint64_t max_iterations) {
  const ccdm::SoftMaxObjective f = ccdm::read_objective_json_file(objective);
  ccdm::FstarOptions options;
  options.cache_dir = cache;
  options.max_iterations = max_iterations;
  const ccdm::FstarResult r = ccdm::compute_fstar(f, accuracy, options);
  nlohmann::json j;
  j["fstar"] = r.value;
  j["accuracy"] = accuracy;
  j["certified_gap"] = r.certified_gap;
  j["iterations"] = r.iterations;
  j["from_cache"] = r.from_cache;
  j["instance_hash"] = ccdm::instance_hash(f);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream(out) << j.dump(1) << '\n';
  std::printf("%.17g\n", r.value);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proximally accelerated coordinate descent for SoftMax-type objectives"};
  app.require_subcommand(1);

  std::string kind = "hetero";
  ccdm::Index m = 0, n = 0, per_column = 8;
  double density = 0.2, gamma = 1.0;
  std::uint64_t seed = 0;
  std::string out;
  auto* gen = app.add_subcommand("gen", "generate a SoftMax instance");
  gen->add_option("--kind", kind, "uniform, hetero or colsparse")->check(CLI::IsMember({"uniform", "hetero", "colsparse"}));
  gen->add_option("--m", m, "rows (ignored for colsparse)");
  gen->add_option("--n", n, "columns")->required();
  gen->add_option("--density", density, "nonzero probability for uniform");
  gen->add_option("--per-column", per_column, "ones per column for colsparse");
  gen->add_option("--gamma", gamma, "smoothing parameter stored in objective.json");
  gen->add_option("--seed", seed)->required();
  gen->add_option("--out", out, "output directory")->required();

  std::string objective, method;
  ccdm::MethodOptions mo;
  double time_budget = 10.0;
  std::uint64_t max_ops = 0;
  std::optional<double> eps, delta, r2, h;
  auto* sol = app.add_subcommand("solve", "minimize a SoftMax objective");
  sol->set_help_flag("--help", "print help");
  sol->add_option("--objective", objective)->required();
  sol->add_option("--method", method)->required()->check(CLI::IsMember({"gm", "fgm", "cdm", "acdm", "ccdm"}));
  sol->add_option("--eps", eps, "target accuracy (CCDM outer count, with --r2)");
  sol->add_option("--delta", delta, "failure probability (CCDM inner count)");
  sol->add_option("--r2", r2, "estimate of ||x0 - x*||^2");
  sol->add_option("--h", h, "prox parameter H (default: mean L_i)");
  sol->add_option("--seed", mo.seed);
  sol->add_option("--time-budget", time_budget, "seconds");
  sol->add_option("--max-ops", max_ops, "coordinate op limit (0 = none)");
  sol->add_option("--check-every", mo.check_every, "test the inner stop condition every k steps");
  sol->add_option("--out", out)->required();

  std::string mdp_file, mdp_kind;
  double eps_policy = 0.0;
  auto* mdp = app.add_subcommand("mdp-solve", "solve an AMDP or DMDP");
  mdp->add_option("--mdp", mdp_file)->required();
  mdp->add_option("--kind", mdp_kind)->required()->check(CLI::IsMember({"amdp", "dmdp"}));
  mdp->add_option("--eps-policy", eps_policy)->required();
  mdp->add_option("--seed", seed);
  mdp->add_option("--out", out)->required();

  std::string config;
  bool concurrent = false;
  auto* bch = app.add_subcommand("bench", "race the solvers on one instance");
  bch->add_option("--config", config)->required();
  bch->add_option("--out", out);
  bch->add_flag("--concurrent", concurrent, "run methods in parallel (wall times interfere)");

  double accuracy = 0.0;
  std::string cache;
  std::uint64_t fstar_iters = ccdm::FstarOptions{}.max_iterations;
  auto* fs_cmd = app.add_subcommand("fstar", "estimate the optimal value");
  fs_cmd->add_option("--objective", objective)->required();
  fs_cmd->add_option("--accuracy", accuracy)->required();
  fs_cmd->add_option("--out", out)->required();
  fs_cmd->add_option("--cache", cache, "cache directory");
  fs_cmd->add_option("--max-iterations", fstar_iters);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return generate(kind, m, n, density, per_column, gamma, seed, out);
    if (*sol) {
      mo.epsilon = eps;
      mo.delta = delta;
      mo.r2 = r2;
      mo.h = h;
      mo.control.time_budget_seconds = time_budget;
      if (max_ops > 0) mo.control.max_ops = max_ops;
      return solve(objective, method, mo, out);
    }
    if (*mdp) return mdp_solve(mdp_file, mdp_kind, eps_policy, seed, out);
    if (*bch) return bench(config, out.empty() ? std::nullopt : std::optional<fs::path>(out), concurrent);
    if (*fs_cmd) {
      return fstar(objective, accuracy, out, cache.empty() ? std::nullopt : std::optional<fs::path>(cache),
                   fstar_iters);
    }
  } catch (const ccdm::InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ccdm::BudgetExhausted& e) {
    std::cerr << "error: " << e.what() << " (best value " << e.best_value() << ")\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
