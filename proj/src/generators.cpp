#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ccdm/bench.hpp"
#include "ccdm/error.hpp"

namespace ccdm {

namespace {

// Interior simplex point and b = -A^T p. Drawn after the matrix so the
// matrix stream does not depend on it.
Instance finish(SparseMatrix a, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<double> p(static_cast<std::size_t>(a.rows()));
  for (double& t : p) t = u(rng);
  const double s = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& t : p) t /= s;
  std::vector<double> b = a.matvec_transposed(p);
  for (double& t : b) t = -t;
  return Instance{std::move(a), std::move(b), std::move(p)};
}

void ones_in_row(std::vector<Triplet>& t, Index row, Index count, const std::vector<Index>& all,
                 std::mt19937_64& rng) {
  std::vector<Index> cols;
  cols.reserve(static_cast<std::size_t>(count));
  std::sample(all.begin(), all.end(), std::back_inserter(cols), count, rng);
  for (Index c : cols) t.push_back({row, c, 1.0});
}

std::vector<Index> iota_vector(Index n) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

}  // namespace

Instance gen_uniform(Index m, Index n, double density, std::uint64_t seed) {
  if (m <= 0 || n <= 0) throw InvalidInput("gen_uniform: m and n must be positive");
  if (!(density > 0.0 && density <= 1.0)) throw InvalidInput("gen_uniform: density must lie in (0, 1]");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(density);
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(density * m * n * 1.1) + 16);
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (coin(rng)) t.push_back({j, i, 1.0});
    }
  }
  return finish(SparseMatrix::from_triplets(m, n, t), rng);
}

Instance gen_hetero(Index m, Index n, std::uint64_t seed) {
  if (m < 10 || n < 10) throw InvalidInput("gen_hetero: m and n must be at least 10");
  std::mt19937_64 rng(seed);
  const Index sparse_rows = static_cast<Index>(std::floor(0.9 * m));
  const Index sparse_nnz = static_cast<Index>(std::floor(0.1 * n));
  const Index dense_nnz = static_cast<Index>(std::floor(0.9 * n));

  std::vector<Index> order(static_cast<std::size_t>(m - 1));
  std::iota(order.begin(), order.end(), Index{1});
  std::shuffle(order.begin(), order.end(), rng);

  const std::vector<Index> all = iota_vector(n);
  std::vector<Triplet> t;
  for (Index i = 0; i < n; ++i) t.push_back({0, i, 1.0});
  for (Index k = 0; k < m - 1; ++k) {
    ones_in_row(t, order[static_cast<std::size_t>(k)], k < sparse_rows ? sparse_nnz : dense_nnz, all, rng);
  }
  return finish(SparseMatrix::from_triplets(m, n, t), rng);
}

Instance gen_colsparse(Index n, Index per_column, std::uint64_t seed, double radius) {
  const Index m = n / 2;
  if (n < 4) throw InvalidInput("gen_colsparse: n must be at least 4");
  if (per_column < 1 || per_column > m - 1) throw InvalidInput("gen_colsparse: per_column must lie in [1, n/2 - 1]");
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw InvalidInput("gen_colsparse: radius must be finite and >= 0");
  std::mt19937_64 rng(seed);
  std::vector<Index> rows(static_cast<std::size_t>(m - 1));
  std::iota(rows.begin(), rows.end(), Index{1});
  std::vector<Triplet> t;
  std::vector<Index> picked;
  for (Index i = 0; i < n; ++i) {
    t.push_back({0, i, 1.0});
    picked.clear();
    std::sample(rows.begin(), rows.end(), std::back_inserter(picked), per_column, rng);
    for (Index j : picked) t.push_back({j, i, 1.0});
  }
  SparseMatrix a = SparseMatrix::from_triplets(m, n, t);

  // Planted point with zero sum (so the dense row scores 0) and norm `radius`.
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(n));
  for (double& v : x) v = normal(rng);
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double norm = 0.0;
  for (double& v : x) {
    v -= mean;
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : x) v *= norm > 0.0 ? radius / norm : 0.0;

  const std::vector<double> z = a.matvec(x);
  const double top = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) s += p[j] = std::exp(z[j] - top);
  for (double& v : p) v /= s;
  std::vector<double> b = a.matvec_transposed(p);
  for (double& v : b) v = -v;
  return Instance{std::move(a), std::move(b), std::move(p)};
}

double analytic_minimum(const Instance& instance, double gamma) {
  double h = 0.0;
  for (double p : instance.weights) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return gamma * h;
}

}  // namespace ccdm
