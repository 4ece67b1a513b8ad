#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ccdm/bench.hpp"
#include "ccdm/error.hpp"

namespace ccdm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> vector_field(const json& j, const char* key, const fs::path& base) {
  const json& v = j.at(key);
  if (v.is_array()) return v.get<std::vector<double>>();
  if (v.is_string()) {
    fs::path p = v.get<std::string>();
    if (p.is_relative()) p = base / p;
    return read_vector_file(p);
  }
  throw InvalidInput(std::string("objective file: '") + key + "' must be a path or an array");
}

struct Fnv {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 1099511628211ULL;
    }
  }
  template <class T>
  void value(const T& t) {
    bytes(&t, sizeof t);
  }
};

}  // namespace

std::vector<double> read_vector_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open vector file: " + path.string());
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || !std::isfinite(x)) {
      throw InvalidInput("vector file " + path.string() + ": bad value '" + tok + "'");
    }
    v.push_back(x);
  }
  return v;
}

void write_vector_file(const fs::path& path, const std::vector<double>& v) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write vector file: " + path.string());
  out << std::setprecision(17);
  for (double x : v) out << x << '\n';
}

SoftMaxObjective read_objective_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open objective file: " + path.string());
  const fs::path base = path.parent_path();
  try {
    json j;
    in >> j;
    fs::path mpath = j.at("matrix").get<std::string>();
    if (mpath.is_relative()) mpath = base / mpath;
    SparseMatrix a = read_matrix_market_file(mpath.string());
    std::vector<double> b = vector_field(j, "b", base);
    std::vector<double> r = j.contains("r") ? vector_field(j, "r", base) : std::vector<double>{};
    return SoftMaxObjective(std::move(a), std::move(b), j.at("gamma").get<double>(), std::move(r),
                            j.value("c", 0.0));
  } catch (const json::exception& e) {
    throw InvalidInput("objective file " + path.string() + ": " + e.what());
  }
}

fs::path write_objective_files(const fs::path& dir, const SoftMaxObjective& f) {
  fs::create_directories(dir);
  write_matrix_market_file((dir / "matrix.mtx").string(), f.matrix());
  write_vector_file(dir / "b.txt", {f.linear().begin(), f.linear().end()});
  json j;
  j["matrix"] = "matrix.mtx";
  j["b"] = "b.txt";
  bool any_r = false;
  for (double t : f.offsets()) any_r = any_r || t != 0.0;
  if (any_r) {
    write_vector_file(dir / "r.txt", {f.offsets().begin(), f.offsets().end()});
    j["r"] = "r.txt";
  }
  j["gamma"] = f.gamma();
  j["c"] = f.constant();
  const fs::path out = dir / "objective.json";
  std::ofstream o(out);
  if (!o) throw InvalidInput("cannot write objective file: " + out.string());
  o << j.dump(1) << '\n';
  return out;
}

std::uint64_t instance_hash(const SoftMaxObjective& f) {
  Fnv h;
  const SparseMatrix& a = f.matrix();
  h.value(a.rows());
  h.value(a.cols());
  for (std::size_t o : a.row_offsets()) h.value(static_cast<std::uint64_t>(o));
  for (const Entry& e : a.row_entries()) {
    h.value(e.index);
    h.value(e.value);
  }
  for (double t : f.linear()) h.value(t);
  for (double t : f.offsets()) h.value(t);
  h.value(f.gamma());
  h.value(f.constant());
  return h.h;
}

}  // namespace ccdm
