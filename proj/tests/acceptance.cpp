// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance                 run all criteria
//   acceptance --criterion 6   run one

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include "ccdm/bench.hpp"
#include "ccdm/budget.hpp"
#include "ccdm/mdp.hpp"
#include "ccdm/objective.hpp"
#include "ccdm/solvers.hpp"
#include "support.hpp"

using namespace ccdm;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- dense Newton oracle ------------------------------------------------------
//
// Minimizes f(x) + h/2 ||x - center||^2 for a SoftMax f using the exact
// Hessian A^T (diag p - p p^T) A / gamma + h I and backtracking.

struct NewtonResult {
  std::vector<double> x;
  double value = 0.0;
  double grad_norm = 0.0;
  double min_eig = 0.0;
};

NewtonResult newton_oracle(const SoftMaxObjective& f, double h, const std::vector<double>& center) {
  const auto d = testing::to_dense(f.matrix());
  const Eigen::Index m = f.matrix().rows(), n = f.matrix().cols();
  Eigen::MatrixXd a(m, n);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < n; ++i) a(j, i) = d[j][i];
  Eigen::VectorXd b(n), r = Eigen::VectorXd::Zero(m), c(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    b(i) = f.linear()[i];
    c(i) = center.empty() ? 0.0 : center[i];
  }
  for (std::size_t j = 0; j < f.offsets().size(); ++j) r(static_cast<Eigen::Index>(j)) = f.offsets()[j];
  const double g = f.gamma();

  auto eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd* p) {
    const Eigen::VectorXd z = a * x + r;
    const double top = z.maxCoeff();
    const Eigen::VectorXd w = ((z.array() - top) / g).exp().matrix();
    const double s = w.sum();
    if (p) *p = w / s;
    return top + g * std::log(s) + b.dot(x) + f.constant() + 0.5 * h * (x - c).squaredNorm();
  };

  Eigen::VectorXd x = c, p;
  double fx = eval(x, &p);
  Eigen::MatrixXd hess(n, n);
  Eigen::VectorXd grad(n);
  for (int it = 0; it < 200; ++it) {
    grad = a.transpose() * p + b + h * (x - c);
    const Eigen::MatrixXd ap = p.asDiagonal() * a;
    const Eigen::VectorXd pa = a.transpose() * p;
    hess = (a.transpose() * ap - pa * pa.transpose()) / g;
    hess.diagonal().array() += h;
    const Eigen::VectorXd step = hess.ldlt().solve(-grad);
    const double decrement = -grad.dot(step);
    if (decrement <= 1e-30 * std::max(1.0, std::abs(fx))) break;
    double t = 1.0;
    Eigen::VectorXd trial_p;
    double trial = eval(x + step, &trial_p);
    while (trial > fx - 0.25 * t * decrement && t > 1e-12) {
      t *= 0.5;
      trial = eval(x + t * step, &trial_p);
    }
    if (trial >= fx) break;
    x += t * step;
    fx = trial;
    p = trial_p;
  }
  grad = a.transpose() * p + b + h * (x - c);
  NewtonResult out;
  out.x.assign(x.data(), x.data() + n);
  out.value = fx;
  out.grad_norm = grad.norm();
  out.min_eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hess, Eigen::EigenvaluesOnly).eigenvalues()(0);
  return out;
}

double dist2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::vector<double> normal_vector(std::uint64_t seed, std::size_t n, double scale) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = d(g);
  return v;
}

double slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  return sxy / sxx;
}

// ---- 1: gradients ---------------------------------------------------------------

Verdict gradients() {
  double worst_fd = 0.0, worst_coord = 0.0;
  std::mt19937_64 g(2024);
  std::uniform_int_distribution<int> dim(2, 64);
  std::uniform_real_distribution<double> gam(0.2, 2.0), dens(0.05, 0.6);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const int m = dim(g), n = dim(g);
    const auto inst = testing::random_softmax(seed, m, n, dens(g), gam(g));
    const auto d = testing::dense_from_triplets(m, n, inst.triplets);
    const auto x = testing::random_vector(g, n);
    const auto grad = inst.objective.gradient(x);
    auto oracle = [&](const std::vector<double>& y) {
      return testing::dense_softmax_value(d, inst.b, inst.r, inst.gamma, inst.c, y);
    };
    double err = 0.0, scale = 1.0;
    for (int i = 0; i < n; ++i) {
      const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (oracle(xp) - oracle(xm)) / (2.0 * h);
      err = std::max(err, std::abs(fd - grad[i]));
      scale = std::max(scale, std::abs(grad[i]));
    }
    worst_fd = std::max(worst_fd, err / scale);

    SoftMaxCache cache(inst.objective, x);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::normal_distribution<double> step(0.0, 0.5);
    for (int k = 0; k < 200; ++k) cache.step(pick(g), step(g));
    const auto full = inst.objective.gradient(cache.point());
    for (int i = 0; i < n; ++i)
      worst_coord = std::max(worst_coord, std::abs(cache.partial(i) - full[i]) / std::max(1.0, std::abs(full[i])));
  }
  return {worst_fd <= 1e-6 && worst_coord <= 1e-9,
          fmt("max rel err: finite differences %.2e (<= 1e-6), coordinate vs full %.2e (<= 1e-9)", worst_fd,
              worst_coord)};
}

// ---- 2: cache fidelity ------------------------------------------------------------

Verdict cache_fidelity() {
  const int m = 200, n = 100;
  const auto inst = testing::random_softmax(7, m, n, 0.1, 0.3);
  const auto d = testing::dense_from_triplets(m, n, inst.triplets);
  SoftMaxCache cache(inst.objective, std::vector<double>(n, 0.0));
  std::mt19937_64 g(7);
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::normal_distribution<double> step(0.0, 0.3);
  double worst_z = 0.0, worst_w = 0.0, worst_s = 0.0;
  for (int k = 1; k <= 100000; ++k) {
    cache.step(pick(g), step(g));
    if (k % 10000 != 0 && k != 99999) continue;
    // Rebuild z, w and S from scratch in long double at the cache's shift.
    const auto x = std::vector<double>(cache.point().begin(), cache.point().end());
    const auto z = testing::dense_matvec(d, x);
    long double s = 0.0L;
    for (int j = 0; j < m; ++j) {
      const long double zj = static_cast<long double>(z[j]) + inst.r[j];
      const long double wj = std::exp((zj - cache.shift()) / inst.gamma);
      s += wj;
      worst_z = std::max(worst_z, static_cast<double>(std::abs(cache.scores()[j] - zj) / std::max(1.0L, std::abs(zj))));
      worst_w = std::max(worst_w, static_cast<double>(std::abs(cache.weights()[j] - wj) / wj));
    }
    worst_s = std::max(worst_s, static_cast<double>(std::abs(cache.weight_sum() - s) / s));
  }
  const bool ok = worst_z <= 1e-9 && worst_w <= 1e-9 && worst_s <= 1e-9;
  return {ok, fmt("1e5 steps, max rel err z %.1e, w %.1e, S %.1e (<= 1e-9), %llu rebuilds", worst_z, worst_w, worst_s,
                  static_cast<unsigned long long>(cache.refresh_count()))};
}

// ---- 3: outer rate ----------------------------------------------------------------

Verdict outer_rate() {
  // exact prox on quadratics
  double min_ratio = INFINITY;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(0.01, 2.0);
    std::vector<double> curv(30), centre(30);
    for (auto& v : curv) v = u(g);
    for (auto& v : centre) v = u(g) - 1.0;
    const QuadraticObjective q(curv, centre);
    const std::vector<double> x0(30, 0.0);
    const double r2 = dist2(x0, centre);
    const auto budget = make_budget(q.smoothness(), {.outer = 20});
    meta_solve(q, x0, budget, exact_quadratic_inner(q), {}, [&](const MetaIterate& it) {
      const double bound = 9.6 * budget.h * r2 / static_cast<double>(it.k * it.k);
      const double res = q.value(it.v);
      min_ratio = std::min(min_ratio, res > 0.0 ? bound / res : INFINITY);
      return false;
    });
  }

  // coordinate descent prox on SoftMax instances, f* and x* from oracles
  int held = 0, runs = 0;
  double worst_oracle = 0.0;
  for (std::uint64_t inst_seed = 0; inst_seed < 10; ++inst_seed) {
    const auto inst = gen_uniform(80, 40, 0.3, 300 + inst_seed);
    const SoftMaxObjective f(inst.a, inst.b, 0.5);
    const auto newton = newton_oracle(f, 0.0, {});
    const double fstar = compute_fstar(f, 1e-10).value;
    worst_oracle = std::max(worst_oracle, std::abs(newton.value - fstar));
    if (newton.min_eig <= 1e-8) continue;
    const std::vector<double> x0(40, 0.0);
    const double r2 = dist2(x0, newton.x);
    const auto budget = make_budget(f.smoothness(), {.outer = 20});
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      bool ok = true;
      meta_solve(f, x0, budget, cdm_inner(budget.inner, seed), {}, [&](const MetaIterate& it) {
        ok = ok && f.value(it.v) - fstar <= 9.6 * budget.h * r2 / static_cast<double>(it.k * it.k);
        return false;
      });
      held += ok;
      ++runs;
    }
  }
  const bool ok = min_ratio >= 1.0 && runs == 100 && held >= 95;
  return {ok, fmt("exact prox: min bound/residual %.3g (>= 1); CDM prox: bound held for all k<=20 in %d/%d runs "
                  "(>= 95); Newton vs f* oracle %.1e",
                  min_ratio, held, runs, worst_oracle)};
}

// ---- 4: inner budget --------------------------------------------------------------

Verdict inner_budget() {
  int held = 0;
  double first_hit_sum = 0.0, worst_oracle = 0.0;
  std::uint64_t budget_n = 0;
  const int runs = 100;
  for (int s = 0; s < runs; ++s) {
    const auto inst = gen_hetero(200, 400, 1000 + s);
    const SoftMaxObjective f(inst.a, inst.b, 0.6);
    const auto sm = f.smoothness();
    const double h = choose_h(sm.coordinate);
    double z = 0.0;
    for (double l : sm.coordinate) z += h + l;
    const std::uint64_t n_budget = inner_budget_fixed(z, h, sm.lipschitz);
    budget_n = n_budget;
    const ProxProblem p(f, normal_vector(2000 + s, 400, 1.0), h);

    // oracle: 50x the budget from an independent stream
    const auto oracle = cdm_solve(p, p.center(), 50 * n_budget, std::uint64_t(5000 + s));
    const auto ystar = oracle.y;
    worst_oracle = std::max(worst_oracle, testing::norm2(p.gradient(ystar)) / h);

    const double threshold = h / (3.0 * h + 2.0 * sm.lipschitz) * std::sqrt(dist2(p.center(), ystar));
    const double thr2 = threshold * threshold;
    std::vector<double> y(p.center().begin(), p.center().end());
    double d2 = dist2(y, ystar);
    std::uint64_t first_hit = 0, offset = 0;
    auto hook = [&](std::uint64_t k, std::size_t i, double yi) {
      d2 += (yi - ystar[i]) * (yi - ystar[i]) - (y[i] - ystar[i]) * (y[i] - ystar[i]);
      y[i] = yi;
      if (first_hit == 0 && d2 <= thr2) first_hit = offset + k;
    };
    Rng rng(s);
    cdm_solve(p, y, n_budget, rng, 0, hook);
    held += dist2(y, ystar) <= thr2;
    while (first_hit == 0 && offset < 20 * n_budget) {
      offset += n_budget;
      const auto start = y;
      cdm_solve(p, start, n_budget, rng, 0, hook);
    }
    first_hit_sum += static_cast<double>(first_hit ? first_hit : 21 * n_budget);
  }
  const double mean_hit = first_hit_sum / runs;
  const bool ok = held >= 90 && mean_hit <= static_cast<double>(budget_n) + 1.0;
  return {ok, fmt("condition held after N=%llu steps in %d/%d runs (>= 90); mean first hit %.0f (<= N+1); oracle "
                  "distance error <= %.1e",
                  static_cast<unsigned long long>(budget_n), held, runs, mean_hit, worst_oracle)};
}

// ---- 5: contraction ---------------------------------------------------------------

Verdict contraction() {
  const auto inst = gen_hetero(100, 200, 77);
  const SoftMaxObjective f(inst.a, inst.b, 0.6);
  const auto sm = f.smoothness();
  const double h = choose_h(sm.coordinate);
  double z = 0.0;
  for (double l : sm.coordinate) z += h + l;
  const ProxProblem p(f, normal_vector(78, 200, 1.0), h);
  const auto newton = newton_oracle(f, h, std::vector<double>(p.center().begin(), p.center().end()));
  const double fstar = newton.value;
  const double f0 = p.value(p.center());

  bool ok = true;
  std::string detail;
  for (double mult : {1.0, 2.0}) {
    const auto n_steps = static_cast<std::uint64_t>(std::llround(mult * z / h));
    double log_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      const auto y = cdm_solve(p, p.center(), n_steps, seed).y;
      log_sum += std::log((p.value(y) - fstar) / (f0 - fstar));
    }
    const double geo = std::exp(log_sum / 200.0);
    const double bound = std::pow(1.0 - h / z, static_cast<double>(n_steps)) * 1.5;
    ok = ok && geo <= bound;
    detail += fmt("N=%llu: geo-mean ratio %.4f vs bound %.4f; ", static_cast<unsigned long long>(n_steps), geo, bound);
  }
  detail += fmt("oracle |grad F| %.1e", newton.grad_norm);
  return {ok, detail};
}

// ---- 6: ordering on the heterogeneous family -----------------------------------

std::optional<std::uint64_t> ops_to(Method method, const SoftMaxObjective& f, double target, std::uint64_t cap,
                                    std::uint64_t check_every = 0) {
  MethodOptions o;
  o.seed = 1;
  o.check_every = check_every;
  o.control.target_value = target;
  o.control.max_ops = cap;
  o.control.trace_factor = 1.02;
  const auto run = run_method(method, f, o);
  return ops_to_reach(run.result.trace, target);
}

Verdict ordering() {
  const auto inst = gen_hetero(500, 1000, 1);
  const SoftMaxObjective f(inst.a, inst.b, 0.6);
  const double fstar = compute_fstar(f, 1e-10).value;
  const double f0 = f.value(std::vector<double>(1000, 0.0));
  const double target = fstar + 1e-2 * (f0 - fstar);
  const std::uint64_t cap = 200'000'000;

  std::vector<std::pair<Method, std::optional<std::uint64_t>>> ops;
  for (Method m : {Method::GM, Method::FGM, Method::CDM, Method::ACDM, Method::CCDM})
    ops.emplace_back(m, ops_to(m, f, target, cap));
  const auto variant = ops_to(Method::CCDM, f, target, cap, 1000);

  auto get = [&](Method m) { return ops[static_cast<int>(m)].second; };
  const auto cc = get(Method::CCDM);
  auto beats = [&](Method m, bool strict) {
    const auto other = get(m);
    if (!cc) return false;
    if (!other) return true;
    return strict ? *cc < *other : *cc <= *other;
  };
  const bool ok = beats(Method::GM, true) && beats(Method::CDM, true) && beats(Method::ACDM, true) &&
                  beats(Method::FGM, false);
  std::string detail = "ops to 1e-2 relative residual:";
  for (const auto& [m, v] : ops)
    detail += " " + method_name(m) + "=" + (v ? std::to_string(*v) : std::string("n/a"));
  detail += "; info: ccdm with stop check every 1000 steps=" + (variant ? std::to_string(*variant) : std::string("n/a"));
  return {ok, detail};
}

// ---- 7: scaling in n ----------------------------------------------------------------

Verdict scaling() {
  const double gamma = 0.6, gap = 1e-3;
  const std::vector<Index> sizes{250, 500, 1000, 2000};
  std::vector<double> log_n, log_cc, log_fgm, log_cc_t, log_fgm_t;
  for (Index n : sizes) {
    double cc = 0.0, fg = 0.0, cc_t = 0.0, fg_t = 0.0;
    const int seeds = 3;
    for (int s = 0; s < seeds; ++s) {
      const auto inst = gen_colsparse(n, 8, 3 + s);
      const SoftMaxObjective f(inst.a, inst.b, gamma);
      const double target = analytic_minimum(inst, gamma) + gap;
      for (Method m : {Method::CCDM, Method::FGM}) {
        MethodOptions o;
        o.seed = s;
        o.control.target_value = target;
        o.control.max_ops = 2'000'000'000;
        o.control.trace_factor = 1.02;
        const auto run = run_method(m, f, o);
        const auto hit = ops_to_reach(run.result.trace, target);
        const double ops = hit ? static_cast<double>(*hit) : INFINITY;
        double wall = INFINITY;
        for (const auto& e : run.result.trace.events)
          if (e.f_value <= target) {
            wall = e.wall_seconds;
            break;
          }
        (m == Method::CCDM ? cc : fg) += std::log(ops) / seeds;
        (m == Method::CCDM ? cc_t : fg_t) += std::log(wall) / seeds;
      }
    }
    log_n.push_back(std::log(static_cast<double>(n)));
    log_cc.push_back(cc);
    log_fgm.push_back(fg);
    log_cc_t.push_back(cc_t);
    log_fgm_t.push_back(fg_t);
  }
  const double s_cc = slope(log_n, log_cc), s_fgm = slope(log_n, log_fgm);
  const bool ok = std::isfinite(s_cc) && s_cc >= 0.8 && s_cc <= 1.4 && s_fgm >= s_cc + 0.3;
  std::string detail = fmt("coordinate_ops slopes: ccdm %.3f (in [0.8, 1.4]), fgm %.3f (>= ccdm + 0.3); ", s_cc, s_fgm);
  detail += fmt("info: wall-time slopes ccdm %.2f fgm %.2f; geo-mean ops ccdm", slope(log_n, log_cc_t),
                slope(log_n, log_fgm_t));
  for (double v : log_cc) detail += fmt(" %.3g", std::exp(v));
  detail += " fgm";
  for (double v : log_fgm) detail += fmt(" %.3g", std::exp(v));
  return {ok, detail};
}

// ---- 8: MDP end to end -------------------------------------------------------------

Verdict mdp_end_to_end() {
  const double eps = 0.1;
  int good = 0, checked = 0, bracket_fail = 0;
  double worst_shortfall = -INFINITY;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto mdp = random_mdp(20, 5, 5, 100 + s, 0.9);
    const double vstar = value_iteration(mdp, MdpKind::Discounted, 1e-10).value;
    const auto red = build_reduced(mdp, eps, MdpKind::Discounted);
    MdpSolveOptions o;
    o.seed = s;
    o.control.record = false;
    o.observer = [&](const MetaIterate& it) {
      if (it.k % o.certify_every == 0) {
        ++checked;
        const auto [lo, hi] = smoothed_value_bounds(red, it.v);
        const double exact = exact_minimax_value(red, it.v);
        const double slack = 1e-12 * std::max(1.0, std::abs(exact));
        if (!(lo <= exact + slack && exact <= hi + slack)) ++bracket_fail;
      }
      return false;
    };
    const auto sol = solve_mdp(mdp, MdpKind::Discounted, eps, o);
    const double value = evaluate_policy(mdp, MdpKind::Discounted, sol.policy);
    good += value >= vstar - eps;
    worst_shortfall = std::max(worst_shortfall, vstar - value);
  }
  const bool ok = good >= 45 && bracket_fail == 0 && checked > 0;
  return {ok, fmt("policy within eps of v* in %d/50 seeds (>= 45), worst shortfall %.4f; bounds bracketed the "
                  "minimax value at %d/%d checked iterates",
                  good, worst_shortfall, checked - bracket_fail, checked)};
}

// ---- 9: budget formulas ------------------------------------------------------------

Verdict budget_formulas() {
  // Hand evaluation:
  //   4 ln(2 * 5^2)          = 4 * 3.912023 = 15.648 -> 16
  //   4 ln(10/0.1 * 2 * 5^2) = 4 * 8.517193 = 34.069 -> 35
  //   (4 sqrt(15) / 5) * 1   = 3.098387             -> 4
  const auto a = inner_budget_fixed(4.0, 1.0, 1.0);
  const auto b = inner_budget_prob(4.0, 1.0, 1.0, 10, 0.1);
  const auto c = outer_budget(1.0, 1.0, 1.0);
  return {a == 16 && b == 35 && c == 4,
          fmt("inner_budget_fixed=%llu (16), inner_budget_prob=%llu (35), outer_budget=%llu (4)",
              static_cast<unsigned long long>(a), static_cast<unsigned long long>(b),
              static_cast<unsigned long long>(c))};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "gradient correctness", 10, gradients},
      {2, "incremental cache fidelity", 10, cache_fidelity},
      {3, "accelerated outer rate", 120, outer_rate},
      {4, "inner budget suffices", 180, inner_budget},
      {5, "inner contraction", 60, contraction},
      {6, "ordering on the heterogeneous family", 300, ordering},
      {7, "scaling in n", 600, scaling},
      {8, "MDP policy quality", 300, mdp_end_to_end},
      {9, "budget formulas", 1, budget_formulas},
  };
  int failed = 0;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double t = seconds_since(t0);
    const bool in_time = t < c.limit_seconds;
    const bool pass = v.pass && in_time;
    failed += !pass;
    std::printf("%s criterion %d (%s): %s; %.2fs (limit %.0fs)%s\n", pass ? "PASS" : "FAIL", c.id, c.name,
                v.detail.c_str(), t, c.limit_seconds, in_time ? "" : " TOO SLOW");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
