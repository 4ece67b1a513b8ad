#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>

#include <json.hpp>

#include "ccdm/bench.hpp"
#include "ccdm/budget.hpp"
#include "ccdm/error.hpp"

namespace ccdm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kUnlimited = std::numeric_limits<std::uint64_t>::max();

bool bounded(const RunControl& c) {
  return std::isfinite(c.time_budget_seconds) || c.max_ops != kUnlimited || c.target_value.has_value();
}

template <class T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  if (v) {
    j[key] = *v;
  } else {
    j[key] = nullptr;
  }
}

template <class T>
std::optional<T> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

}  // namespace

Method parse_method(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::tolower(c); });
  if (t == "gm") return Method::GM;
  if (t == "fgm") return Method::FGM;
  if (t == "cdm") return Method::CDM;
  if (t == "acdm") return Method::ACDM;
  if (t == "ccdm") return Method::CCDM;
  throw InvalidInput("unknown method '" + s + "' (expected gm, fgm, cdm, acdm or ccdm)");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::GM: return "gm";
    case Method::FGM: return "fgm";
    case Method::CDM: return "cdm";
    case Method::ACDM: return "acdm";
    case Method::CCDM: return "ccdm";
  }
  return "?";
}

MethodRun run_method(Method method, const SoftMaxObjective& f, const MethodOptions& options) {
  const std::vector<double> x0(f.dim(), 0.0);
  const Smoothness s = f.smoothness();
  MethodRun run;
  if (method != Method::CCDM) {
    if (!bounded(options.control)) {
      throw InvalidInput(method_name(method) + ": needs a time budget, an op limit or a target value");
    }
    switch (method) {
      case Method::GM: run.result = gm_solve(f, x0, s.lipschitz, kUnlimited, options.control); break;
      case Method::FGM: run.result = fgm_solve(f, x0, s.lipschitz, kUnlimited, options.control); break;
      case Method::CDM:
        run.result = plain_cdm_solve(f, x0, s.coordinate, kUnlimited, options.seed, options.control);
        break;
      case Method::ACDM:
        run.result = acdm_solve(f, x0, s.coordinate, kUnlimited, options.seed, options.control);
        break;
      default: break;
    }
    return run;
  }

  BudgetRequest request;
  request.h = options.h;
  request.epsilon = options.epsilon;
  request.delta = options.delta;
  request.r2 = options.r2;
  const bool outer_known = options.epsilon && options.r2;
  if (!outer_known) {
    if (options.delta) throw InvalidInput("ccdm: delta needs eps and r2 to fix the outer count");
    if (!bounded(options.control)) throw InvalidInput("ccdm: needs eps and r2, a time budget, an op limit or a target");
    request.outer = kUnlimited;
  }
  run.budget = make_budget(s, request);
  run.result = catalyst_cdm_solve(f, x0, *run.budget, options.seed, options.control, options.check_every);
  return run;
}

void write_run_metadata(const fs::path& path, Method method, const MethodOptions& options, const MethodRun& run) {
  json j;
  j["method"] = method_name(method);
  j["seed"] = options.seed;
  if (run.budget) {
    j["H"] = run.budget->h;
    if (run.budget->outer == kUnlimited) {
      j["N_outer"] = nullptr;
    } else {
      j["N_outer"] = run.budget->outer;
    }
    j["N_inner"] = run.budget->inner;
  } else {
    j["H"] = nullptr;
    j["N_outer"] = nullptr;
    j["N_inner"] = nullptr;
  }
  put_optional(j, "epsilon", options.epsilon);
  put_optional(j, "delta", options.delta);
  j["iterations"] = run.result.iterations;
  j["coordinate_ops"] = run.result.coordinate_ops;
  if (!run.result.trace.events.empty()) {
    j["final_f"] = run.result.trace.events.back().f_value;
    j["wall_seconds"] = run.result.trace.events.back().wall_seconds;
  }
  write_json(path, j);
}

void BenchConfig::validate() const {
  if (methods.empty()) throw InvalidInput("bench config: at least one method is required");
  if (!(time_budget_seconds > 0.0)) throw InvalidInput("bench config: time_budget_seconds must be positive");
  if (max_ops && *max_ops == 0) throw InvalidInput("bench config: max_ops must be positive");
  if (!(fstar_accuracy > 0.0)) throw InvalidInput("bench config: fstar_accuracy must be positive");
  if (epsilon && !(*epsilon > 0.0)) throw InvalidInput("bench config: eps must be positive");
  if (delta && !(*delta > 0.0 && *delta < 1.0)) throw InvalidInput("bench config: delta must lie in (0, 1)");
  if (r2 && !(*r2 > 0.0)) throw InvalidInput("bench config: r2 must be positive");
  if (target_residual && !(*target_residual > 0.0)) throw InvalidInput("bench config: target_residual must be positive");
  if (target_gap && !(*target_gap > 0.0)) throw InvalidInput("bench config: target_gap must be positive");
  if (!(trace_factor > 1.0)) throw InvalidInput("bench config: trace_factor must exceed 1");
  if (instance.kind == "file") {
    if (instance.objective_file.empty()) throw InvalidInput("bench config: file instance needs 'objective'");
  } else if (instance.kind != "uniform" && instance.kind != "hetero" && instance.kind != "colsparse") {
    throw InvalidInput("bench config: unknown instance kind '" + instance.kind + "'");
  } else if (!(gamma > 0.0)) {
    throw InvalidInput("bench config: gamma must be positive");
  }
}

BenchConfig read_bench_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open bench config: " + path.string());
  BenchConfig c;
  try {
    json j;
    in >> j;
    const json& inst = j.at("instance");
    c.instance.kind = inst.at("kind").get<std::string>();
    if (c.instance.kind == "file") {
      fs::path p = inst.at("objective").get<std::string>();
      c.instance.objective_file = p.is_relative() ? path.parent_path() / p : p;
    } else {
      c.instance.n = inst.at("n").get<Index>();
      c.instance.m = inst.value("m", c.instance.kind == "colsparse" ? c.instance.n / 2 : Index{0});
      c.instance.density = inst.value("density", 0.2);
      c.instance.per_column = inst.value("per_column", Index{8});
      c.instance.radius = inst.value("radius", 10.0);
      c.instance.seed = inst.value("seed", std::uint64_t{0});
    }
    c.gamma = j.value("gamma", 1.0);
    for (const auto& m : j.at("methods")) c.methods.push_back(parse_method(m.get<std::string>()));
    c.time_budget_seconds = j.value("time_budget_seconds", 60.0);
    c.max_ops = get_optional<std::uint64_t>(j, "max_ops");
    c.epsilon = get_optional<double>(j, "eps");
    c.delta = get_optional<double>(j, "delta");
    c.r2 = get_optional<double>(j, "r2");
    c.check_every = j.value("check_every", std::uint64_t{0});
    c.seed = j.value("seed", std::uint64_t{0});
    c.fstar_accuracy = j.value("fstar_accuracy", 1e-10);
    c.target_residual = get_optional<double>(j, "target_residual");
    c.target_gap = get_optional<double>(j, "target_gap");
    c.trace_factor = j.value("trace_factor", 1.3);
    c.sequential = j.value("sequential", true);
    if (auto p = get_optional<std::string>(j, "fstar_cache")) c.fstar_cache = fs::path(*p);
    if (auto p = get_optional<std::string>(j, "output_dir")) c.output_dir = *p;
  } catch (const json::exception& e) {
    throw InvalidInput("bench config " + path.string() + ": " + e.what());
  }
  c.validate();
  return c;
}

void write_bench_config_file(const fs::path& path, const BenchConfig& c) {
  json inst;
  inst["kind"] = c.instance.kind;
  if (c.instance.kind == "file") {
    inst["objective"] = c.instance.objective_file.string();
  } else {
    inst["m"] = c.instance.m;
    inst["n"] = c.instance.n;
    inst["density"] = c.instance.density;
    inst["per_column"] = c.instance.per_column;
    inst["radius"] = c.instance.radius;
    inst["seed"] = c.instance.seed;
  }
  json j;
  j["instance"] = inst;
  j["gamma"] = c.gamma;
  j["methods"] = json::array();
  for (Method m : c.methods) j["methods"].push_back(method_name(m));
  j["time_budget_seconds"] = c.time_budget_seconds;
  put_optional(j, "max_ops", c.max_ops);
  put_optional(j, "eps", c.epsilon);
  put_optional(j, "delta", c.delta);
  put_optional(j, "r2", c.r2);
  j["check_every"] = c.check_every;
  j["seed"] = c.seed;
  j["fstar_accuracy"] = c.fstar_accuracy;
  put_optional(j, "target_residual", c.target_residual);
  put_optional(j, "target_gap", c.target_gap);
  j["trace_factor"] = c.trace_factor;
  j["sequential"] = c.sequential;
  if (c.fstar_cache) j["fstar_cache"] = c.fstar_cache->string();
  j["output_dir"] = c.output_dir.string();
  write_json(path, j);
}

SoftMaxObjective make_bench_objective(const BenchConfig& c) {
  const InstanceSpec& s = c.instance;
  if (s.kind == "file") return read_objective_json_file(s.objective_file);
  Instance inst;
  if (s.kind == "uniform") {
    inst = gen_uniform(s.m, s.n, s.density, s.seed);
  } else if (s.kind == "hetero") {
    inst = gen_hetero(s.m, s.n, s.seed);
  } else if (s.kind == "colsparse") {
    inst = gen_colsparse(s.n, s.per_column, s.seed, s.radius);
  } else {
    throw InvalidInput("unknown instance kind '" + s.kind + "'");
  }
  return SoftMaxObjective(std::move(inst.a), std::move(inst.b), c.gamma);
}

BenchReport run_benchmark(const BenchConfig& config) {
  config.validate();
  if (config.output_dir.empty()) throw InvalidInput("bench: output directory is required");
  fs::create_directories(config.output_dir);
  write_bench_config_file(config.output_dir / "config.json", config);

  const SoftMaxObjective f = make_bench_objective(config);
  write_objective_files(config.output_dir / "instance", f);

  BenchReport report;
  FstarOptions fo;
  fo.cache_dir = config.fstar_cache;
  const FstarResult fs_result = compute_fstar(f, config.fstar_accuracy, fo);
  report.fstar = fs_result.value;
  report.f0 = f.value(std::vector<double>(f.dim(), 0.0));
  {
    json j;
    j["fstar"] = fs_result.value;
    j["accuracy"] = config.fstar_accuracy;
    j["certified_gap"] = fs_result.certified_gap;
    j["iterations"] = fs_result.iterations;
    j["from_cache"] = fs_result.from_cache;
    j["f0"] = report.f0;
    j["instance_hash"] = instance_hash(f);
    write_json(config.output_dir / "fstar.json", j);
  }

  MethodOptions base;
  base.seed = config.seed;
  base.epsilon = config.epsilon;
  base.delta = config.delta;
  base.r2 = config.r2;
  base.check_every = config.check_every;
  base.control.time_budget_seconds = config.time_budget_seconds;
  if (config.max_ops) base.control.max_ops = *config.max_ops;
  base.control.trace_factor = config.trace_factor;
  if (config.target_residual || config.target_gap) {
    double gap = 0.0;
    if (config.target_residual) gap = *config.target_residual * (report.f0 - report.fstar);
    if (config.target_gap) gap = std::max(gap, *config.target_gap);
    base.control.target_value = report.fstar + gap;
  }

  auto one = [&](Method m) {
    MethodOutcome outcome{m, std::nullopt, {}};
    const fs::path stem = config.output_dir / ("trace_" + method_name(m));
    try {
      MethodRun run = run_method(m, f, base);
      write_trace_csv_file(stem.string() + ".csv", run.result.trace);
      write_run_metadata(stem.string() + ".json", m, base, run);
      outcome.trace = std::move(run.result.trace);
    } catch (const std::exception& e) {
      outcome.error = e.what();
      json j;
      j["method"] = method_name(m);
      j["seed"] = base.seed;
      j["error"] = outcome.error;
      try {
        write_json(stem.string() + ".json", j);
      } catch (const std::exception&) {
      }
    }
    return outcome;
  };

  if (config.sequential) {
    for (Method m : config.methods) report.outcomes.push_back(one(m));
  } else {
    std::vector<std::future<MethodOutcome>> jobs;
    for (Method m : config.methods) jobs.push_back(std::async(std::launch::async, one, m));
    for (auto& j : jobs) report.outcomes.push_back(j.get());
  }
  return report;
}

}  // namespace ccdm
