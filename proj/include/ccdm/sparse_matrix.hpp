#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ccdm {

using Index = std::int32_t;

struct Triplet {
  Index row;
  Index col;
  double value;
};

/// A nonzero seen from one side of the matrix: `index` is the column when
/// iterating a row and the row when iterating a column.
struct Entry {
  Index index;
  double value;
};

/// Immutable sparse matrix stored twice, row-major (CSR) and column-major
/// (CSC). Row scans feed full products, column scans feed single-coordinate
/// updates; both run in time linear in the nonzeros they touch.
///
/// Indices are sorted and unique within every row and column, no explicit
/// zeros are stored and every value is finite.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  /// Duplicates are summed; entries that sum to exactly zero are dropped.
  /// Throws InvalidInput on out-of-range indices or non-finite values.
  static SparseMatrix from_triplets(Index rows, Index cols, std::span<const Triplet> triplets);
  static SparseMatrix identity(Index n);

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return row_entries_.size(); }

  std::span<const Entry> row(Index j) const;
  std::span<const Entry> column(Index i) const;

  /// y = A x, serial reference. Throws on length mismatch.
  std::vector<double> matvec(std::span<const double> x) const;
  /// y = A^T u evaluated as a gather over the column-major layout.
  std::vector<double> matvec_transposed(std::span<const double> u) const;

  /// max_j ||A_j||^2 over rows.
  double row_sqnorm_max() const;
  /// max_j A_{ji}^2 for every column i.
  std::vector<double> col_sq_max() const;

  std::vector<Triplet> triplets() const;

  // Raw layouts for the kernels.
  std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  std::span<const Entry> row_entries() const noexcept { return row_entries_; }
  std::span<const std::size_t> col_offsets() const noexcept { return col_offsets_; }
  std::span<const Entry> col_entries() const noexcept { return col_entries_; }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<Entry> row_entries_;
  std::vector<std::size_t> col_offsets_{0};
  std::vector<Entry> col_entries_;
};

/// `%%MatrixMarket matrix coordinate real general`, 1-based indices.
SparseMatrix read_matrix_market(std::istream& in);
SparseMatrix read_matrix_market_file(const std::string& path);
void write_matrix_market(std::ostream& out, const SparseMatrix& a);
void write_matrix_market_file(const std::string& path, const SparseMatrix& a);

}  // namespace ccdm
