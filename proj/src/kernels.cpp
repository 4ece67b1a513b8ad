#include "ccdm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

#include "ccdm/error.hpp"

namespace ccdm::kernels {

namespace {

void check_spmv(const SparseMatrix& a, std::span<const double> x, std::span<const double> offset,
                std::span<double> y) {
  if (x.size() != static_cast<std::size_t>(a.cols()) || y.size() != static_cast<std::size_t>(a.rows()) ||
      (!offset.empty() && offset.size() != y.size())) {
    throw InvalidInput("spmv: length mismatch");
  }
}

void check_spmv_t(const SparseMatrix& a, std::span<const double> u, std::span<double> y) {
  if (u.size() != static_cast<std::size_t>(a.rows()) || y.size() != static_cast<std::size_t>(a.cols())) {
    throw InvalidInput("spmv_transposed: length mismatch");
  }
}

inline double gather(std::span<const Entry> entries, std::size_t begin, std::size_t end,
                     std::span<const double> v) {
  double s = 0.0;
  for (std::size_t k = begin; k < end; ++k) {
    s += entries[k].value * v[static_cast<std::size_t>(entries[k].index)];
  }
  return s;
}

// Small inputs are not worth a parallel region.
constexpr std::ptrdiff_t kParallelThreshold = 2048;

}  // namespace

double LseState::value(double gamma) const { return shift + gamma * std::log(sum); }

namespace serial {

void spmv(const SparseMatrix& a, std::span<const double> x, std::span<const double> offset, std::span<double> y) {
  check_spmv(a, x, offset, y);
  const auto off = a.row_offsets();
  const auto ent = a.row_entries();
  for (std::size_t j = 0; j < y.size(); ++j) {
    y[j] = gather(ent, off[j], off[j + 1], x) + (offset.empty() ? 0.0 : offset[j]);
  }
}

void spmv_transposed(const SparseMatrix& a, std::span<const double> u, std::span<double> y) {
  check_spmv_t(a, u, y);
  const auto off = a.col_offsets();
  const auto ent = a.col_entries();
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = gather(ent, off[i], off[i + 1], u);
  }
}

LseState softmax_weights(std::span<const double> z, double gamma, std::span<double> w) {
  LseState st;
  st.shift = *std::max_element(z.begin(), z.end());
  for (std::size_t j = 0; j < z.size(); ++j) {
    w[j] = std::exp((z[j] - st.shift) / gamma);
    st.sum += w[j];
  }
  return st;
}

}  // namespace serial

namespace parallel {

void spmv(const SparseMatrix& a, std::span<const double> x, std::span<const double> offset, std::span<double> y) {
  check_spmv(a, x, offset, y);
  const auto off = a.row_offsets();
  const auto ent = a.row_entries();
  const auto rows = static_cast<std::ptrdiff_t>(y.size());
#pragma omp parallel for schedule(dynamic, 64) if (rows >= kParallelThreshold)
  for (std::ptrdiff_t j = 0; j < rows; ++j) {
    const auto u = static_cast<std::size_t>(j);
    y[u] = gather(ent, off[u], off[u + 1], x) + (offset.empty() ? 0.0 : offset[u]);
  }
}

void spmv_transposed(const SparseMatrix& a, std::span<const double> u, std::span<double> y) {
  check_spmv_t(a, u, y);
  const auto off = a.col_offsets();
  const auto ent = a.col_entries();
  const auto cols = static_cast<std::ptrdiff_t>(y.size());
#pragma omp parallel for schedule(dynamic, 64) if (cols >= kParallelThreshold)
  for (std::ptrdiff_t i = 0; i < cols; ++i) {
    const auto k = static_cast<std::size_t>(i);
    y[k] = gather(ent, off[k], off[k + 1], u);
  }
}

LseState softmax_weights(std::span<const double> z, double gamma, std::span<double> w) {
  const auto m = static_cast<std::ptrdiff_t>(z.size());
  double shift = -std::numeric_limits<double>::infinity();
#pragma omp parallel for reduction(max : shift) if (m >= kParallelThreshold)
  for (std::ptrdiff_t j = 0; j < m; ++j) {
    shift = std::max(shift, z[static_cast<std::size_t>(j)]);
  }
  double sum = 0.0;
#pragma omp parallel for reduction(+ : sum) if (m >= kParallelThreshold)
  for (std::ptrdiff_t j = 0; j < m; ++j) {
    const auto u = static_cast<std::size_t>(j);
    w[u] = std::exp((z[u] - shift) / gamma);
    sum += w[u];
  }
  return {shift, sum};
}

}  // namespace parallel

}  // namespace ccdm::kernels
