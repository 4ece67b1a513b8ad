#include "ccdm/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "ccdm/budget.hpp"
#include "ccdm/error.hpp"
#include "ccdm/solvers.hpp"

namespace ccdm {

namespace {

constexpr double kStochasticTol = 1e-12;

// Bellman backup of one state-action row: r + gamma * P_row . v.
double backup(const MdpInstance& mdp, std::size_t row, double gamma, std::span<const double> v) {
  double s = 0.0;
  for (const Entry& e : mdp.transitions.row(static_cast<Index>(row))) {
    s += e.value * v[static_cast<std::size_t>(e.index)];
  }
  return mdp.rewards[row] + gamma * s;
}

double sup_norm_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

Policy greedy_policy(const MdpInstance& mdp, double gamma, std::span<const double> v) {
  Policy pi(mdp.states);
  for (std::size_t i = 0; i < mdp.states; ++i) {
    const std::size_t first = mdp.action_offsets[i];
    const std::size_t count = mdp.actions_of(i);
    std::size_t best = 0;
    double best_q = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < count; ++a) {
      const double q = backup(mdp, first + a, gamma, v);
      if (q > best_q) {
        best_q = q;
        best = a;
      }
    }
    pi[i].assign(count, 0.0);
    pi[i][best] = 1.0;
  }
  return pi;
}

void check_policy(const MdpInstance& mdp, const Policy& policy) {
  if (policy.size() != mdp.states) throw InvalidInput("policy has wrong number of states");
  for (std::size_t i = 0; i < mdp.states; ++i) {
    if (policy[i].size() != mdp.actions_of(i)) throw InvalidInput("policy has wrong number of actions");
  }
}

// Policy-averaged reward and transition row of state i.
double policy_backup(const MdpInstance& mdp, const Policy& policy, std::size_t i, double gamma,
                     std::span<const double> v) {
  double s = 0.0;
  for (std::size_t a = 0; a < policy[i].size(); ++a) {
    if (policy[i][a] != 0.0) s += policy[i][a] * backup(mdp, mdp.action_offsets[i] + a, gamma, v);
  }
  return s;
}

}  // namespace

void MdpInstance::validate() const {
  if (states == 0) throw InvalidInput("mdp: no states");
  if (action_offsets.size() != states + 1 || action_offsets.front() != 0) {
    throw InvalidInput("mdp: action offsets do not match the state count");
  }
  for (std::size_t i = 0; i < states; ++i) {
    if (action_offsets[i + 1] <= action_offsets[i]) throw InvalidInput("mdp: every state needs at least one action");
  }
  const std::size_t m = action_offsets.back();
  if (rewards.size() != m) throw InvalidInput("mdp: reward count does not match the action count");
  if (static_cast<std::size_t>(transitions.rows()) != m || static_cast<std::size_t>(transitions.cols()) != states) {
    throw InvalidInput("mdp: transition matrix must be (actions x states)");
  }
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (const Entry& e : transitions.row(static_cast<Index>(j))) {
      if (e.value < 0.0) throw InvalidInput("mdp: negative transition probability");
      s += e.value;
    }
    if (std::abs(s - 1.0) > kStochasticTol) {
      throw InvalidInput("mdp: transition row " + std::to_string(j) + " does not sum to 1");
    }
    if (!(rewards[j] >= 0.0 && rewards[j] <= 1.0)) throw InvalidInput("mdp: rewards must lie in [0, 1]");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidInput("mdp: gamma must lie in (0, 1]");
  if (initial.size() != states) throw InvalidInput("mdp: initial distribution has wrong length");
  double q = 0.0;
  for (double t : initial) {
    if (!(t >= 0.0)) throw InvalidInput("mdp: initial distribution must be nonnegative");
    q += t;
  }
  if (std::abs(q - 1.0) > 1e-9) throw InvalidInput("mdp: initial distribution must sum to 1");
}

MdpKind parse_mdp_kind(const std::string& s) {
  if (s == "amdp") return MdpKind::Average;
  if (s == "dmdp") return MdpKind::Discounted;
  throw InvalidInput("unknown MDP kind '" + s + "' (expected amdp or dmdp)");
}

std::vector<double> ReducedProblem::expand(std::span<const double> reduced) const {
  if (!pinned) return {reduced.begin(), reduced.end()};
  std::vector<double> full(states, 0.0);
  std::copy(reduced.begin(), reduced.end(), full.begin() + 1);
  return full;
}

std::vector<double> ReducedProblem::restrict(std::span<const double> full) const {
  if (!pinned) return {full.begin(), full.end()};
  return {full.begin() + 1, full.end()};
}

double accuracy_map(double eps_tilde, double gamma, MdpKind kind) {
  if (!(eps_tilde > 0.0)) throw InvalidInput("policy accuracy must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidInput("gamma must lie in (0, 1]");
  if (kind == MdpKind::Average || gamma == 1.0) return eps_tilde / 6.0;
  return (1.0 - gamma) * eps_tilde / 6.0;
}

SparseMatrix mdp_constraint_matrix(const MdpInstance& mdp, double gamma) {
  std::vector<Triplet> t;
  t.reserve(mdp.transitions.nnz() + mdp.actions());
  for (const Triplet& e : mdp.transitions.triplets()) t.push_back({e.row, e.col, gamma * e.value});
  for (std::size_t i = 0; i < mdp.states; ++i) {
    for (std::size_t j = mdp.action_offsets[i]; j < mdp.action_offsets[i + 1]; ++j) {
      t.push_back({static_cast<Index>(j), static_cast<Index>(i), -1.0});
    }
  }
  return SparseMatrix::from_triplets(mdp.transitions.rows(), mdp.transitions.cols(), t);
}

ReducedProblem build_reduced(const MdpInstance& mdp, double eps_tilde, MdpKind kind) {
  mdp.validate();
  const std::size_t m = mdp.actions();
  if (m < 2) throw InvalidInput("mdp: at least two state-action pairs are needed (ln m must be positive)");
  const double gamma = kind == MdpKind::Average ? 1.0 : mdp.gamma;
  const double eps_opt = accuracy_map(eps_tilde, gamma, kind);
  const double sigma = eps_opt / (2.0 * std::log(static_cast<double>(m)));

  SparseMatrix a = mdp_constraint_matrix(mdp, gamma);
  std::vector<double> b(mdp.states, 0.0);
  const bool pinned = kind == MdpKind::Average;
  if (!pinned) {
    for (std::size_t i = 0; i < mdp.states; ++i) b[i] = (1.0 - gamma) * mdp.initial[i];
  } else {
    if (mdp.states < 2) throw InvalidInput("amdp: pinning v_0 needs at least two states");
    std::vector<Triplet> kept;
    for (const Triplet& e : a.triplets()) {
      if (e.col != 0) kept.push_back({e.row, e.col - 1, e.value});
    }
    a = SparseMatrix::from_triplets(a.rows(), a.cols() - 1, kept);
    b.assign(mdp.states - 1, 0.0);
  }
  const double c = -sigma * std::log(static_cast<double>(m));
  return ReducedProblem{SoftMaxObjective(std::move(a), std::move(b), sigma, mdp.rewards, c),
                        sigma,
                        eps_opt,
                        gamma,
                        kind,
                        mdp.states,
                        mdp.action_offsets,
                        pinned};
}

double exact_minimax_value(const ReducedProblem& red, std::span<const double> v) {
  const std::vector<double> z = red.objective.scores(v);
  double lin = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) lin += red.objective.linear()[i] * v[i];
  return *std::max_element(z.begin(), z.end()) + lin;
}

std::pair<double, double> smoothed_value_bounds(const ReducedProblem& red, std::span<const double> v) {
  const double lower = red.objective.value(v);
  return {lower, lower + red.sigma * std::log(static_cast<double>(red.objective.rows()))};
}

Policy extract_policy(const ReducedProblem& red, std::span<const double> v, bool greedy) {
  const std::vector<double> z = red.objective.scores(v);
  Policy pi(red.states);
  for (std::size_t i = 0; i < red.states; ++i) {
    const std::size_t first = red.action_offsets[i];
    const std::size_t count = red.action_offsets[i + 1] - first;
    const auto scores = std::span<const double>(z).subspan(first, count);
    const auto best = static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
    pi[i].assign(count, 0.0);
    if (greedy) {
      pi[i][best] = 1.0;
      continue;
    }
    double sum = 0.0;
    for (std::size_t a = 0; a < count; ++a) {
      pi[i][a] = std::exp((scores[a] - scores[best]) / red.sigma);
      sum += pi[i][a];
    }
    for (double& p : pi[i]) p /= sum;
  }
  return pi;
}

ValueIterationResult value_iteration(const MdpInstance& mdp, MdpKind kind, double tol, std::uint64_t max_iterations) {
  mdp.validate();
  if (!(tol > 0.0)) throw InvalidInput("value iteration: tolerance must be positive");
  const std::size_t n = mdp.states;
  ValueIterationResult out;
  std::vector<double> v(n, 0.0), next(n);

  if (kind == MdpKind::Discounted) {
    const double gamma = mdp.gamma;
    if (!(gamma < 1.0)) throw InvalidInput("value iteration: a discounted MDP needs gamma < 1");
    // ||v_{k+1} - v*|| <= gamma / (1 - gamma) ||v_{k+1} - v_k||.
    const double stop = tol * (1.0 - gamma) / gamma;
    for (out.iterations = 1; out.iterations <= max_iterations; ++out.iterations) {
      for (std::size_t i = 0; i < n; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = mdp.action_offsets[i]; j < mdp.action_offsets[i + 1]; ++j) {
          best = std::max(best, backup(mdp, j, gamma, v));
        }
        next[i] = best;
      }
      const double diff = sup_norm_diff(next, v);
      v.swap(next);
      if (diff <= stop) break;
    }
    if (out.iterations > max_iterations) throw std::runtime_error("value iteration did not converge");
    out.policy = greedy_policy(mdp, gamma, v);
    out.value = 0.0;
    for (std::size_t i = 0; i < n; ++i) out.value += mdp.initial[i] * v[i];
    out.values = std::move(v);
    return out;
  }

  // Relative value iteration on T'(h) = (T(h) + h) / 2, which has the same
  // gain/bias solutions and is aperiodic.
  double gain = 0.0;
  for (out.iterations = 1; out.iterations <= max_iterations; ++out.iterations) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t i = 0; i < n; ++i) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t j = mdp.action_offsets[i]; j < mdp.action_offsets[i + 1]; ++j) {
        best = std::max(best, backup(mdp, j, 1.0, v));
      }
      lo = std::min(lo, best - v[i]);
      hi = std::max(hi, best - v[i]);
      next[i] = 0.5 * (best + v[i]);
    }
    gain = 0.5 * (lo + hi);
    const double ref = next[0];
    for (double& t : next) t -= ref;
    v.swap(next);
    if (hi - lo <= tol) break;
  }
  if (out.iterations > max_iterations) throw std::runtime_error("relative value iteration did not converge");
  out.policy = greedy_policy(mdp, 1.0, v);
  out.value = gain;
  out.values = std::move(v);
  return out;
}

double evaluate_policy(const MdpInstance& mdp, MdpKind kind, const Policy& policy, double tol) {
  mdp.validate();
  check_policy(mdp, policy);
  const std::size_t n = mdp.states;
  std::vector<double> v(n, 0.0), next(n);
  constexpr std::uint64_t kCap = 100'000'000;
  if (kind == MdpKind::Discounted) {
    const double gamma = mdp.gamma;
    if (!(gamma < 1.0)) throw InvalidInput("policy evaluation: a discounted MDP needs gamma < 1");
    const double stop = tol * (1.0 - gamma) / gamma;
    for (std::uint64_t k = 0; k < kCap; ++k) {
      for (std::size_t i = 0; i < n; ++i) next[i] = policy_backup(mdp, policy, i, gamma, v);
      const double diff = sup_norm_diff(next, v);
      v.swap(next);
      if (diff <= stop) break;
    }
    double value = 0.0;
    for (std::size_t i = 0; i < n; ++i) value += mdp.initial[i] * v[i];
    return value;
  }
  // Gain of the (possibly multichain) policy chain started from q:
  // Cesaro average of q^T P_pi^t r_pi via the aperiodic lazy chain.
  std::vector<double> dist(mdp.initial), dnext(n);
  std::vector<double> reward(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < policy[i].size(); ++a) reward[i] += policy[i][a] * mdp.rewards[mdp.action_offsets[i] + a];
  }
  for (std::uint64_t k = 0; k < kCap; ++k) {
    std::fill(dnext.begin(), dnext.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      dnext[i] += 0.5 * dist[i];
      for (std::size_t a = 0; a < policy[i].size(); ++a) {
        if (policy[i][a] == 0.0) continue;
        for (const Entry& e : mdp.transitions.row(static_cast<Index>(mdp.action_offsets[i] + a))) {
          dnext[static_cast<std::size_t>(e.index)] += 0.5 * dist[i] * policy[i][a] * e.value;
        }
      }
    }
    const double diff = sup_norm_diff(dnext, dist);
    dist.swap(dnext);
    if (diff <= tol) break;
  }
  double gain = 0.0;
  for (std::size_t i = 0; i < n; ++i) gain += dist[i] * reward[i];
  return gain;
}

MdpInstance random_mdp(std::size_t states, std::size_t actions_per_state, std::size_t support, std::uint64_t seed,
                       double gamma) {
  if (states == 0 || actions_per_state == 0) throw InvalidInput("random_mdp: need at least one state and action");
  if (support == 0 || support > states) throw InvalidInput("random_mdp: support must lie in [1, n]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> spacing(1.0);

  MdpInstance mdp;
  mdp.states = states;
  mdp.gamma = gamma;
  mdp.action_offsets.resize(states + 1);
  const std::size_t m = states * actions_per_state;
  std::vector<Triplet> t;
  t.reserve(m * support);
  std::vector<Index> all(states);
  for (std::size_t i = 0; i < states; ++i) all[i] = static_cast<Index>(i);
  std::vector<Index> targets;
  std::vector<double> weights(support);
  for (std::size_t row = 0; row < m; ++row) {
    targets.clear();
    std::sample(all.begin(), all.end(), std::back_inserter(targets), static_cast<std::ptrdiff_t>(support), rng);
    double total = 0.0;
    for (double& w : weights) {
      w = spacing(rng);
      total += w;
    }
    // Normalize, then let the largest entry absorb the rounding so the row
    // sums to one up to a single ulp.
    double sum_rest = 0.0;
    std::size_t largest = 0;
    for (std::size_t k = 0; k < support; ++k) {
      weights[k] /= total;
      if (weights[k] > weights[largest]) largest = k;
    }
    for (std::size_t k = 0; k < support; ++k) {
      if (k != largest) sum_rest += weights[k];
    }
    weights[largest] = 1.0 - sum_rest;
    for (std::size_t k = 0; k < support; ++k) t.push_back({static_cast<Index>(row), targets[k], weights[k]});
    mdp.rewards.push_back(unit(rng));
  }
  for (std::size_t i = 0; i <= states; ++i) mdp.action_offsets[i] = i * actions_per_state;
  mdp.transitions = SparseMatrix::from_triplets(static_cast<Index>(m), static_cast<Index>(states), t);
  mdp.initial.assign(states, 1.0 / static_cast<double>(states));
  return mdp;
}

double duality_gap(const ReducedProblem& red, const MdpInstance& mdp, std::span<const double> v) {
  const Policy pi = extract_policy(red, v, false);
  const std::size_t n = red.states;
  const std::size_t m = red.objective.rows();
  std::vector<double> d(n), next(n);

  // next = P_pi^T d
  auto push = [&](const std::vector<double>& from, std::vector<double>& to) {
    std::fill(to.begin(), to.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < pi[i].size(); ++a) {
        const double mass = from[i] * pi[i][a];
        if (mass == 0.0) continue;
        for (const Entry& e : mdp.transitions.row(static_cast<Index>(red.action_offsets[i] + a))) {
          to[static_cast<std::size_t>(e.index)] += mass * e.value;
        }
      }
    }
  };

  constexpr int kMaxSweeps = 200000;
  bool converged = false;
  if (red.kind == MdpKind::Discounted) {
    const double g = red.gamma;
    d = mdp.initial;
    for (int k = 0; k < kMaxSweeps && !converged; ++k) {
      push(d, next);
      double change = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = (1.0 - g) * mdp.initial[i] + g * next[i];
        change += std::abs(t - d[i]);
        d[i] = t;
      }
      converged = change <= 1e-15;
    }
  } else {
    std::fill(d.begin(), d.end(), 1.0 / static_cast<double>(n));
    for (int k = 0; k < kMaxSweeps && !converged; ++k) {
      push(d, next);
      double change = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        change += std::abs(next[i] - d[i]);
        d[i] = 0.5 * (d[i] + next[i]);
      }
      converged = change <= 1e-14;
    }
  }
  if (!converged) return std::numeric_limits<double>::infinity();

  std::vector<double> mu(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < pi[i].size(); ++a) mu[red.action_offsets[i] + a] = d[i] * pi[i][a];
  }
  const std::vector<double> residual = red.objective.matrix().matvec_transposed(mu);
  double infeasible = 0.0, vmax = 0.0;
  for (std::size_t i = 0; i < residual.size(); ++i) {
    infeasible += std::abs(residual[i] + red.objective.linear()[i]);
    vmax = std::max(vmax, std::abs(v[i]));
  }
  if (infeasible > 1e-10) return std::numeric_limits<double>::infinity();

  double dual = 0.0;
  const auto md = static_cast<double>(m);
  for (std::size_t j = 0; j < m; ++j) {
    dual += mu[j] * red.objective.offsets()[j];
    if (mu[j] > 0.0) dual -= red.sigma * mu[j] * std::log(md * mu[j]);
  }
  // A^T mu + b is zero only up to rounding; its pairing with v is the slack.
  return red.objective.value(v) - dual + infeasible * (2.0 * vmax + 1.0);
}

MdpSolution solve_mdp(const MdpInstance& mdp, MdpKind kind, double eps_tilde, const MdpSolveOptions& options) {
  const ReducedProblem red = build_reduced(mdp, eps_tilde, kind);
  const Smoothness s = red.objective.smoothness();
  BudgetRequest request;
  request.epsilon = red.eps_opt;
  if (options.outer) {
    request.outer = options.outer;
  } else {
    const double n = static_cast<double>(mdp.states);
    request.r2 = options.r2.value_or(kind == MdpKind::Discounted ? n / ((1.0 - red.gamma) * (1.0 - red.gamma)) : n);
  }
  const SolverBudget budget = make_budget(s, request);
  const std::vector<double> v0(red.objective.dim(), 0.0);

  MdpSolution out;
  out.gap = std::numeric_limits<double>::infinity();
  MetaObserver certify;
  if (options.certify_every > 0 || options.observer) {
    certify = [&](const MetaIterate& it) {
      const bool stop = options.observer && options.observer(it);
      if (options.certify_every == 0 || it.k % options.certify_every != 0) return stop;
      out.gap = duality_gap(red, mdp, it.v);
      out.certified = out.gap <= red.eps_opt;
      return stop || out.certified;
    };
  }
  SolveResult run = meta_solve(red.objective, v0, budget, cdm_inner(budget.inner, options.seed, options.check_every),
                               options.control, certify);
  run.trace.seed = options.seed;
  if (!out.certified) {
    out.gap = duality_gap(red, mdp, run.x);
    out.certified = out.gap <= red.eps_opt;
  }

  out.policy = extract_policy(red, run.x, options.greedy);
  out.values = red.expand(run.x);
  out.eps_opt = red.eps_opt;
  out.sigma = red.sigma;
  out.outer = budget.outer;
  out.inner = budget.inner;
  out.outer_run = run.iterations;
  out.trace = std::move(run.trace);
  return out;
}

MdpInstance read_mdp_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open MDP file: " + path);
  nlohmann::json j;
  try {
    in >> j;
    MdpInstance mdp;
    mdp.states = j.at("n").get<std::size_t>();
    const auto counts = j.at("actions").get<std::vector<std::size_t>>();
    if (counts.size() != mdp.states) throw InvalidInput("mdp file: 'actions' must list one count per state");
    mdp.action_offsets.assign(1, 0);
    for (std::size_t c : counts) mdp.action_offsets.push_back(mdp.action_offsets.back() + c);
    std::vector<Triplet> t;
    for (const auto& e : j.at("transitions")) {
      if (!e.is_array() || e.size() != 3) throw InvalidInput("mdp file: transitions must be [row, state, prob]");
      t.push_back({e[0].get<Index>(), e[1].get<Index>(), e[2].get<double>()});
    }
    const auto m = static_cast<Index>(mdp.action_offsets.back());
    if (m <= 0) throw InvalidInput("mdp file: no actions");
    mdp.transitions = SparseMatrix::from_triplets(m, static_cast<Index>(mdp.states), t);
    mdp.rewards = j.at("rewards").get<std::vector<double>>();
    mdp.gamma = j.value("gamma", 1.0);
    if (j.contains("q")) {
      mdp.initial = j.at("q").get<std::vector<double>>();
    } else {
      mdp.initial.assign(mdp.states, 1.0 / static_cast<double>(mdp.states));
    }
    mdp.validate();
    return mdp;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("mdp file " + path + ": " + e.what());
  }
}

void write_mdp_json_file(const std::string& path, const MdpInstance& mdp) {
  nlohmann::json j;
  j["n"] = mdp.states;
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < mdp.states; ++i) counts.push_back(mdp.actions_of(i));
  j["actions"] = counts;
  nlohmann::json t = nlohmann::json::array();
  for (const Triplet& e : mdp.transitions.triplets()) t.push_back({e.row, e.col, e.value});
  j["transitions"] = t;
  j["rewards"] = mdp.rewards;
  j["gamma"] = mdp.gamma;
  j["q"] = mdp.initial;
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write MDP file: " + path);
  out << j.dump(1) << '\n';
}

void write_policy_json_file(const std::string& path, const Policy& policy) {
  nlohmann::json j;
  j["policy"] = policy;
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write policy file: " + path);
  out << j.dump(1) << '\n';
}

}  // namespace ccdm
