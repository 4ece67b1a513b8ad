#include "ccdm/sparse_matrix.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "ccdm/error.hpp"

namespace ccdm {

SparseMatrix SparseMatrix::from_triplets(Index rows, Index cols, std::span<const Triplet> triplets) {
  if (rows <= 0 || cols <= 0) {
    throw InvalidInput("sparse matrix dimensions must be positive");
  }
  std::vector<Triplet> sorted(triplets.begin(), triplets.end());
  for (const Triplet& t : sorted) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      std::ostringstream msg;
      msg << "triplet (" << t.row << ", " << t.col << ") out of range for " << rows << "x" << cols;
      throw InvalidInput(msg.str());
    }
    if (!std::isfinite(t.value)) {
      throw InvalidInput("non-finite matrix entry");
    }
  }
  std::stable_sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseMatrix a;
  a.rows_ = rows;
  a.cols_ = cols;
  a.row_offsets_.assign(static_cast<std::size_t>(rows) + 1, 0);
  a.row_entries_.reserve(sorted.size());
  std::vector<Index> entry_rows;
  entry_rows.reserve(sorted.size());

  for (std::size_t k = 0; k < sorted.size();) {
    const Index r = sorted[k].row;
    const Index c = sorted[k].col;
    double sum = 0.0;
    for (; k < sorted.size() && sorted[k].row == r && sorted[k].col == c; ++k) {
      sum += sorted[k].value;
    }
    if (!std::isfinite(sum)) {
      throw InvalidInput("duplicate entries overflow to a non-finite value");
    }
    if (sum != 0.0) {
      a.row_entries_.push_back({c, sum});
      entry_rows.push_back(r);
      ++a.row_offsets_[static_cast<std::size_t>(r) + 1];
    }
  }
  for (std::size_t j = 0; j < static_cast<std::size_t>(rows); ++j) {
    a.row_offsets_[j + 1] += a.row_offsets_[j];
  }

  // Counting-sort the row-major entries into columns. Rows are visited in
  // increasing order, so row indices within each column come out sorted.
  a.col_offsets_.assign(static_cast<std::size_t>(cols) + 1, 0);
  for (const Entry& e : a.row_entries_) {
    ++a.col_offsets_[static_cast<std::size_t>(e.index) + 1];
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(cols); ++i) {
    a.col_offsets_[i + 1] += a.col_offsets_[i];
  }
  a.col_entries_.resize(a.row_entries_.size());
  std::vector<std::size_t> fill(a.col_offsets_.begin(), a.col_offsets_.end() - 1);
  for (std::size_t k = 0; k < a.row_entries_.size(); ++k) {
    const Entry& e = a.row_entries_[k];
    a.col_entries_[fill[static_cast<std::size_t>(e.index)]++] = {entry_rows[k], e.value};
  }
  return a;
}

SparseMatrix SparseMatrix::identity(Index n) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return from_triplets(n, n, t);
}

std::span<const Entry> SparseMatrix::row(Index j) const {
  if (j < 0 || j >= rows_) throw InvalidInput("row index out of range");
  const auto u = static_cast<std::size_t>(j);
  return std::span<const Entry>(row_entries_).subspan(row_offsets_[u], row_offsets_[u + 1] - row_offsets_[u]);
}

std::span<const Entry> SparseMatrix::column(Index i) const {
  if (i < 0 || i >= cols_) throw InvalidInput("column index out of range");
  const auto u = static_cast<std::size_t>(i);
  return std::span<const Entry>(col_entries_).subspan(col_offsets_[u], col_offsets_[u + 1] - col_offsets_[u]);
}

std::vector<double> SparseMatrix::matvec(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(cols_)) throw InvalidInput("matvec: length mismatch");
  std::vector<double> y(static_cast<std::size_t>(rows_), 0.0);
  for (std::size_t j = 0; j < y.size(); ++j) {
    double s = 0.0;
    for (std::size_t k = row_offsets_[j]; k < row_offsets_[j + 1]; ++k) {
      s += row_entries_[k].value * x[static_cast<std::size_t>(row_entries_[k].index)];
    }
    y[j] = s;
  }
  return y;
}

std::vector<double> SparseMatrix::matvec_transposed(std::span<const double> u) const {
  if (u.size() != static_cast<std::size_t>(rows_)) throw InvalidInput("matvec_transposed: length mismatch");
  std::vector<double> y(static_cast<std::size_t>(cols_), 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = col_offsets_[i]; k < col_offsets_[i + 1]; ++k) {
      s += col_entries_[k].value * u[static_cast<std::size_t>(col_entries_[k].index)];
    }
    y[i] = s;
  }
  return y;
}

double SparseMatrix::row_sqnorm_max() const {
  double best = 0.0;
  for (std::size_t j = 0; j < static_cast<std::size_t>(rows_); ++j) {
    double s = 0.0;
    for (std::size_t k = row_offsets_[j]; k < row_offsets_[j + 1]; ++k) {
      s += row_entries_[k].value * row_entries_[k].value;
    }
    best = std::max(best, s);
  }
  return best;
}

std::vector<double> SparseMatrix::col_sq_max() const {
  std::vector<double> out(static_cast<std::size_t>(cols_), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t k = col_offsets_[i]; k < col_offsets_[i + 1]; ++k) {
      out[i] = std::max(out[i], col_entries_[k].value * col_entries_[k].value);
    }
  }
  return out;
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> out;
  out.reserve(nnz());
  for (std::size_t j = 0; j < static_cast<std::size_t>(rows_); ++j) {
    for (std::size_t k = row_offsets_[j]; k < row_offsets_[j + 1]; ++k) {
      out.push_back({static_cast<Index>(j), row_entries_[k].index, row_entries_[k].value});
    }
  }
  return out;
}

SparseMatrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("matrix market: empty input");
  std::string banner, object, format, field, symmetry;
  {
    std::istringstream header(line);
    header >> banner >> object >> format >> field >> symmetry;
    auto lower = [](std::string s) {
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
      return s;
    };
    if (banner != "%%MatrixMarket" || lower(object) != "matrix" || lower(format) != "coordinate" ||
        (lower(field) != "real" && lower(field) != "integer") || lower(symmetry) != "general") {
      throw InvalidInput("matrix market: expected '%%MatrixMarket matrix coordinate real general'");
    }
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '%') break;
  }
  long long rows = 0, cols = 0, entries = 0;
  {
    std::istringstream size_line(line);
    if (!(size_line >> rows >> cols >> entries) || rows <= 0 || cols <= 0 || entries < 0) {
      throw InvalidInput("matrix market: bad size line");
    }
  }
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<std::size_t>(entries));
  for (long long k = 0; k < entries; ++k) {
    long long r = 0, c = 0;
    double v = 0.0;
    if (!(in >> r >> c >> v)) throw InvalidInput("matrix market: truncated entry list");
    triplets.push_back({static_cast<Index>(r - 1), static_cast<Index>(c - 1), v});
  }
  return SparseMatrix::from_triplets(static_cast<Index>(rows), static_cast<Index>(cols), triplets);
}

SparseMatrix read_matrix_market_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open matrix file: " + path);
  return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const SparseMatrix& a) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
  out << std::setprecision(17);
  for (const Triplet& t : a.triplets()) {
    out << t.row + 1 << ' ' << t.col + 1 << ' ' << t.value << '\n';
  }
}

void write_matrix_market_file(const std::string& path, const SparseMatrix& a) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write matrix file: " + path);
  write_matrix_market(out, a);
}

}  // namespace ccdm
