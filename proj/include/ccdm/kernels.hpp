#pragma once

#include <span>

#include "ccdm/sparse_matrix.hpp"

// Data-parallel kernels behind the full-gradient and function-value paths.
// `serial` is the reference implementation kept for testing; `parallel` is the
// OpenMP version used by the library. Per-row / per-column results are
// bitwise identical between the two; reductions may differ in rounding.
namespace ccdm::kernels {

/// Shift and normalizer of a log-sum-exp evaluation:
/// gamma * ln sum_j exp(z_j / gamma) == shift + gamma * ln(sum).
struct LseState {
  double shift = 0.0;
  double sum = 0.0;

  double value(double gamma) const;
};

namespace serial {

/// y = A x + offset (offset may be empty).
void spmv(const SparseMatrix& a, std::span<const double> x, std::span<const double> offset, std::span<double> y);
/// y = A^T u, one independent gather per column.
void spmv_transposed(const SparseMatrix& a, std::span<const double> u, std::span<double> y);
/// w_j = exp((z_j - M) / gamma) with M = max_j z_j; returns (M, sum w).
LseState softmax_weights(std::span<const double> z, double gamma, std::span<double> w);

}  // namespace serial

namespace parallel {

void spmv(const SparseMatrix& a, std::span<const double> x, std::span<const double> offset, std::span<double> y);
void spmv_transposed(const SparseMatrix& a, std::span<const double> u, std::span<double> y);
LseState softmax_weights(std::span<const double> z, double gamma, std::span<double> w);

}  // namespace parallel

}  // namespace ccdm::kernels
