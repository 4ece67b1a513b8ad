#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "ccdm/bench.hpp"
#include "ccdm/error.hpp"

namespace ccdm {

namespace fs = std::filesystem;

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

fs::path cache_file(const fs::path& dir, std::uint64_t hash) {
  std::ostringstream name;
  name << "fstar_" << std::hex << hash << ".json";
  return dir / name.str();
}

}  // namespace

FstarResult compute_fstar(const Objective& f, double accuracy, const FstarOptions& options) {
  if (!(accuracy > 0.0)) throw InvalidInput("compute_fstar: accuracy must be positive");
  const std::size_t n = f.dim();
  const double l_max = std::max(f.smoothness().lipschitz, 1e-12);

  const std::vector<double> x0(n, 0.0);
  std::vector<double> x = x0, y = x0, x_next(n), d(n);
  std::vector<double> gy(n), gn(n);
  f.gradient(y, gy);

  FstarResult out;
  double best = std::numeric_limits<double>::infinity();
  {
    const double g0 = std::sqrt(dot(gy, gy));
    if (g0 <= accuracy) {
      out.value = f.value(x0);
      out.certified_gap = g0;
      return out;
    }
  }

  // Step sizes adapt to the local curvature (halved every iteration, doubled
  // until the secant test passes, never above the global constant); momentum
  // restarts whenever the gradient step points against the last move.
  double l = l_max;
  double t = 1.0;
  for (std::uint64_t k = 1; k <= options.max_iterations; ++k) {
    l = l / 2.0;
    for (;;) {
      for (std::size_t i = 0; i < n; ++i) x_next[i] = y[i] - gy[i] / l;
      f.gradient(x_next, gn);
      double curv = 0.0, step2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d[i] = x_next[i] - y[i];
        curv += (gn[i] - gy[i]) * d[i];
        step2 += d[i] * d[i];
      }
      if (l >= l_max || curv <= l * step2 * (1.0 + 1e-9)) break;
      l = std::min(2.0 * l, l_max);
    }

    const double gap = std::sqrt(dot(gn, gn)) * (2.0 * dist(x_next, x0) + 1.0);
    if (!std::isfinite(gap)) throw std::runtime_error("compute_fstar: iterates became non-finite");
    if (gap <= accuracy) {
      out.value = f.value(x_next);
      out.certified_gap = gap;
      out.iterations = k;
      return out;
    }
    if (k % 256 == 0) best = std::min(best, f.value(x_next));

    double against = 0.0;
    for (std::size_t i = 0; i < n; ++i) against += gy[i] * (x_next[i] - x[i]);
    if (against > 0.0) t = 1.0;
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    const double momentum = (t - 1.0) / t_next;
    if (momentum == 0.0) {
      y = x_next;
      gy = gn;
    } else {
      for (std::size_t i = 0; i < n; ++i) y[i] = x_next[i] + momentum * (x_next[i] - x[i]);
      f.gradient(y, gy);
    }
    x.swap(x_next);
    t = t_next;
  }
  best = std::min(best, f.value(x));
  throw BudgetExhausted("compute_fstar: iteration budget exhausted before the accuracy was certified", best);
}

FstarResult compute_fstar(const SoftMaxObjective& f, double accuracy, const FstarOptions& options) {
  if (!(accuracy > 0.0)) throw InvalidInput("compute_fstar: accuracy must be positive");
  if (!options.cache_dir) return compute_fstar(static_cast<const Objective&>(f), accuracy, options);

  const std::uint64_t hash = instance_hash(f);
  const fs::path file = cache_file(*options.cache_dir, hash);
  if (std::ifstream in(file); in) {
    try {
      nlohmann::json j;
      in >> j;
      if (j.at("hash").get<std::uint64_t>() == hash && j.at("accuracy").get<double>() <= accuracy) {
        FstarResult r;
        r.value = j.at("value").get<double>();
        r.certified_gap = j.at("certified_gap").get<double>();
        r.iterations = j.at("iterations").get<std::uint64_t>();
        r.from_cache = true;
        return r;
      }
    } catch (const nlohmann::json::exception&) {
      // unreadable cache entry: recompute and overwrite
    }
  }
  FstarResult r = compute_fstar(static_cast<const Objective&>(f), accuracy, options);
  fs::create_directories(*options.cache_dir);
  nlohmann::json j;
  j["hash"] = hash;
  j["accuracy"] = accuracy;
  j["value"] = r.value;
  j["certified_gap"] = r.certified_gap;
  j["iterations"] = r.iterations;
  std::ofstream out(file);
  out << j.dump(1) << '\n';
  return r;
}

}  // namespace ccdm
