#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "ccdm/bench.hpp"
#include "ccdm/mdp.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "ccdm_test_cli";

int run(const std::string& args) {
  const std::string cmd = std::string(CCDM_CLI_PATH) + " " + args + " > " + (kDir / "log.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string p(const std::string& rel) { return (kDir / rel).string(); }

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

struct Fresh {
  Fresh() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
  }
  ~Fresh() { fs::remove_all(kDir); }
};

}  // namespace

TEST_CASE_FIXTURE(Fresh, "gen, fstar and solve") {
  REQUIRE(run("gen --kind uniform --m 30 --n 50 --density 0.3 --gamma 0.5 --seed 3 --out " + p("inst")) == 0);
  CHECK(fs::exists(kDir / "inst" / "matrix.mtx"));
  CHECK(fs::exists(kDir / "inst" / "objective.json"));

  REQUIRE(run("fstar --objective " + p("inst/objective.json") + " --accuracy 1e-9 --out " + p("fstar.json")) == 0);
  const double fstar = read_json(p("fstar.json")).at("fstar").get<double>();
  const auto f = ccdm::read_objective_json_file(kDir / "inst" / "objective.json");
  CHECK(f.gamma() == 0.5);
  CHECK(fstar == doctest::Approx(ccdm::analytic_minimum(ccdm::gen_uniform(30, 50, 0.3, 3), 0.5)).epsilon(1e-8));

  for (const char* m : {"gm", "fgm", "cdm", "acdm", "ccdm"}) {
    const std::string out = p(std::string("run_") + m);
    REQUIRE(run("solve --objective " + p("inst/objective.json") + " --method " + m +
                " --max-ops 20000 --seed 1 --out " + out) == 0);
    CHECK(fs::exists(fs::path(out) / "trace.csv"));
    CHECK(fs::exists(fs::path(out) / "x.txt"));
    const auto meta = read_json(out + "/metadata.json");
    CHECK(meta.at("method") == m);
    CHECK(meta.at("final_f").get<double>() >= fstar - 1e-9);
  }
  REQUIRE(run("solve --objective " + p("inst/objective.json") + " --method ccdm --eps 1e-3 --r2 1 --delta 0.1 --h 2 --out " +
              p("budgeted")) == 0);
  const auto meta = read_json(p("budgeted/metadata.json"));
  CHECK(meta.at("H").get<double>() == 2.0);
  CHECK(meta.at("N_outer").get<std::uint64_t>() == ccdm::outer_budget(2.0, 1.0, 1e-3));
}

TEST_CASE_FIXTURE(Fresh, "exit codes") {
  REQUIRE(run("gen --kind hetero --m 20 --n 30 --seed 1 --out " + p("inst")) == 0);
  CHECK(run("frobnicate") == 2);
  CHECK(run("solve --objective " + p("inst/objective.json") + " --method sgd --out " + p("x")) == 2);
  CHECK(run("solve --objective " + p("missing.json") + " --method gm --out " + p("x")) == 2);
  CHECK(run("gen --kind uniform --m 10 --n 10 --density 2 --seed 1 --out " + p("y")) == 2);
  CHECK(run("fstar --objective " + p("inst/objective.json") + " --accuracy 1e-12 --max-iterations 2 --out " +
            p("f.json")) == 3);
  CHECK(run("fstar --objective " + p("inst/objective.json") + " --accuracy -1 --out " + p("f.json")) == 2);
}

TEST_CASE_FIXTURE(Fresh, "mdp-solve and bench") {
  const auto mdp = ccdm::random_mdp(8, 3, 3, 5);
  ccdm::write_mdp_json_file(p("mdp.json"), mdp);
  REQUIRE(run("mdp-solve --mdp " + p("mdp.json") + " --kind dmdp --eps-policy 0.3 --seed 2 --out " + p("m")) == 0);
  const auto policy = read_json(p("m/policy.json")).at("policy");
  CHECK(policy.size() == 8);
  for (const auto& dist : policy) {
    double s = 0.0;
    for (double v : dist) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(fs::exists(kDir / "m" / "values.txt"));
  CHECK(run("mdp-solve --mdp " + p("mdp.json") + " --kind pomdp --eps-policy 0.3 --out " + p("m2")) == 2);

  std::ofstream(p("bench.json")) << R"({"instance": {"kind": "uniform", "m": 20, "n": 30, "density": 0.3, "seed": 1},
    "gamma": 0.5, "methods": ["gm", "cdm", "ccdm"], "max_ops": 20000, "eps": 0.01, "r2": 1.0, "seed": 3})";
  REQUIRE(run("bench --config " + p("bench.json") + " --out " + p("b")) == 0);
  for (const char* m : {"gm", "cdm", "ccdm"}) CHECK(fs::exists(kDir / "b" / ("trace_" + std::string(m) + ".csv")));
  CHECK(fs::exists(kDir / "b" / "instance" / "objective.json"));
  std::ofstream(p("broken.json")) << R"({"methods": []})";
  CHECK(run("bench --config " + p("broken.json") + " --out " + p("b2")) == 2);
}
