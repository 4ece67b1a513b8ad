#pragma once

// Dense reference helpers shared by the test binaries. Nothing here calls
// into the library's sparse or log-sum-exp code paths.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ccdm/objective.hpp"
#include "ccdm/sparse_matrix.hpp"

namespace testing {

using Dense = std::vector<std::vector<double>>;

inline Dense dense_from_triplets(int m, int n, const std::vector<ccdm::Triplet>& t) {
  Dense d(m, std::vector<double>(n, 0.0));
  for (const auto& e : t) d[e.row][e.col] += e.value;
  return d;
}

inline Dense to_dense(const ccdm::SparseMatrix& a) {
  Dense d(a.rows(), std::vector<double>(a.cols(), 0.0));
  for (int j = 0; j < a.rows(); ++j) {
    for (const auto& e : a.row(j)) d[j][e.index] = e.value;
  }
  return d;
}

inline std::vector<double> dense_matvec(const Dense& a, const std::vector<double>& x) {
  std::vector<double> y(a.size(), 0.0);
  for (std::size_t j = 0; j < a.size(); ++j) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<long double>(a[j][i]) * x[i];
    y[j] = static_cast<double>(s);
  }
  return y;
}

/// gamma * ln sum exp(z / gamma) in long double with the textbook shift.
inline double dense_lse(const std::vector<double>& z, double gamma) {
  long double top = z[0];
  for (double v : z) top = std::max<long double>(top, v);
  long double s = 0.0L;
  for (double v : z) s += std::exp((static_cast<long double>(v) - top) / gamma);
  return static_cast<double>(top + gamma * std::log(s));
}

/// Dense evaluation of gamma * LSE((Ax + r) / gamma) + <b, x> + c.
inline double dense_softmax_value(const Dense& a, const std::vector<double>& b, const std::vector<double>& r,
                                  double gamma, double c, const std::vector<double>& x) {
  std::vector<double> z = dense_matvec(a, x);
  for (std::size_t j = 0; j < z.size(); ++j) z[j] += r[j];
  long double lin = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) lin += static_cast<long double>(b[i]) * x[i];
  return dense_lse(z, gamma) + static_cast<double>(lin) + c;
}

inline std::vector<ccdm::Triplet> random_triplets(std::mt19937_64& rng, int m, int n, int count, double lo = -1.0,
                                                  double hi = 1.0) {
  std::uniform_int_distribution<int> row(0, m - 1), col(0, n - 1);
  std::uniform_real_distribution<double> val(lo, hi);
  std::vector<ccdm::Triplet> t;
  for (int k = 0; k < count; ++k) t.push_back({row(rng), col(rng), val(rng)});
  return t;
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

struct RandomSoftMax {
  std::vector<ccdm::Triplet> triplets;
  std::vector<double> b;
  std::vector<double> r;
  double gamma;
  double c;
  ccdm::SoftMaxObjective objective;
};

/// Random SoftMax objective with entries in [-1, 1], b = -A^T p for an
/// interior simplex point p (so it is bounded below), random offsets r.
inline RandomSoftMax random_softmax(std::uint64_t seed, int m, int n, double density = 0.3, double gamma = 0.5,
                                    bool offsets = true) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution keep(density);
  std::uniform_real_distribution<double> val(-1.0, 1.0), pos(0.5, 1.5);
  std::vector<ccdm::Triplet> t;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) {
      if (keep(rng)) t.push_back({j, i, val(rng)});
    }
  }
  std::vector<double> p(m);
  double s = 0.0;
  for (double& v : p) s += v = pos(rng);
  for (double& v : p) v /= s;
  const Dense d = dense_from_triplets(m, n, t);
  std::vector<double> b(n, 0.0);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < n; ++i) b[i] -= d[j][i] * p[j];
  }
  std::vector<double> r(m, 0.0);
  if (offsets) r = random_vector(rng, m, 0.3);
  const double c = offsets ? 0.25 : 0.0;
  auto a = ccdm::SparseMatrix::from_triplets(m, n, t);
  return RandomSoftMax{t, b, r, gamma, c, ccdm::SoftMaxObjective(std::move(a), b, gamma, r, c)};
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace testing
