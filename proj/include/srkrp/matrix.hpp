#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "srkrp/error.hpp"

namespace srkrp {

// Row-major dense real matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols), entries_(checked_size(rows, cols), 0.0) {}

  DenseMatrix(int rows, int cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (entries_.size() != checked_size(rows, cols))
      throw ShapeError("dense matrix: entry count " + std::to_string(entries_.size()) +
                       " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    for (double v : entries_)
      if (!std::isfinite(v)) throw ParameterError("dense matrix: non-finite entry");
  }

  static DenseMatrix identity(int n) {
    DenseMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double operator()(int r, int c) const { return entries_[static_cast<std::size_t>(r) * cols_ + c]; }
  double& operator()(int r, int c) { return entries_[static_cast<std::size_t>(r) * cols_ + c]; }

  const std::vector<double>& entries() const { return entries_; }
  double* data() { return entries_.data(); }
  const double* data() const { return entries_.data(); }

  std::span<const double> row(int r) const {
    return {entries_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  long nnz() const {
    long count = 0;
    for (double v : entries_)
      if (v != 0.0) ++count;
    return count;
  }

  bool operator==(const DenseMatrix&) const = default;

 private:
  static std::size_t checked_size(int rows, int cols) {
    if (rows < 0 || cols < 0) throw ShapeError("dense matrix: negative dimension");
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> entries_;
};

inline DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("matrix add: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  DenseMatrix out(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) out(r, c) = a(r, c) + b(r, c);
  return out;
}

inline DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError("matrix subtract: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  DenseMatrix out(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) out(r, c) = a(r, c) - b(r, c);
  return out;
}

inline DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix out(a.rows(), a.cols());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) out(r, c) = s * a(r, c);
  return out;
}

struct SparseEntry {
  int row;
  int col;
  double value;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Coordinate-format sparse matrix: entries sorted row-major, unique, nonzero.
// Values below 1e-300 in magnitude are rejected so that "structurally zero"
// and "numerically tiny" stay distinct.
class SparseMatrix {
 public:
  SparseMatrix() = default;

  SparseMatrix(int rows, int cols, std::vector<SparseEntry> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (rows < 0 || cols < 0) throw ShapeError("sparse matrix: negative dimension");
    std::sort(entries_.begin(), entries_.end(), [](const SparseEntry& a, const SparseEntry& b) {
      return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const auto& e = entries_[i];
      if (e.row < 0 || e.row >= rows_ || e.col < 0 || e.col >= cols_)
        throw ShapeError("sparse matrix: entry (" + std::to_string(e.row) + "," +
                         std::to_string(e.col) + ") outside " + std::to_string(rows_) + "x" +
                         std::to_string(cols_));
      if (!std::isfinite(e.value)) throw ParameterError("sparse matrix: non-finite value");
      if (std::abs(e.value) < 1e-300)
        throw ParameterError("sparse matrix: zero (or denormal-tiny) value at (" +
                             std::to_string(e.row) + "," + std::to_string(e.col) + ")");
      if (i > 0 && entries_[i - 1].row == e.row && entries_[i - 1].col == e.col)
        throw ParameterError("sparse matrix: duplicate entry at (" + std::to_string(e.row) + "," +
                             std::to_string(e.col) + ")");
    }
    row_start_.assign(rows_ + 1, 0);
    for (const auto& e : entries_) ++row_start_[e.row + 1];
    for (int r = 0; r < rows_; ++r) row_start_[r + 1] += row_start_[r];
  }

  // Magnitudes below the 1e-300 floor flush to structural zero here, so any
  // dense matrix converts cleanly; compute paths that must not drop values
  // check for such entries before choosing this representation.
  static SparseMatrix from_dense(const DenseMatrix& d) {
    std::vector<SparseEntry> entries;
    for (int r = 0; r < d.rows(); ++r)
      for (int c = 0; c < d.cols(); ++c)
        if (std::abs(d(r, c)) >= 1e-300) entries.push_back({r, c, d(r, c)});
    return SparseMatrix(d.rows(), d.cols(), std::move(entries));
  }

  DenseMatrix to_dense() const {
    DenseMatrix d(rows_, cols_);
    for (const auto& e : entries_) d(e.row, e.col) = e.value;
    return d;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  long nnz() const { return static_cast<long>(entries_.size()); }
  const std::vector<SparseEntry>& entries() const { return entries_; }

  std::span<const SparseEntry> row(int r) const {
    return {entries_.data() + row_start_[r],
            static_cast<std::size_t>(row_start_[r + 1] - row_start_[r])};
  }

  bool operator==(const SparseMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && entries_ == other.entries_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<SparseEntry> entries_;
  std::vector<int> row_start_{0};
};

// C = A^T B restricted to matching row counts; entry (i,j) accumulates
// a(k,i)*b(k,j) over ascending k.
inline DenseMatrix matmul_transpose_left(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows())
    throw ShapeError("transpose product: row counts differ, " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()));
  DenseMatrix out(a.cols(), b.cols());
  for (int i = 0; i < a.cols(); ++i) {
    for (int k = 0; k < a.rows(); ++k) {
      double aki = a(k, i);
      if (aki == 0.0) continue;
      for (int j = 0; j < b.cols(); ++j) out(i, j) += aki * b(k, j);
    }
  }
  return out;
}

// Structural test: true iff some column is exactly zero. Coefficients are
// nonzero by construction, so no tolerance is involved.
inline bool has_zero_column(const DenseMatrix& g) {
  if (g.empty()) throw ShapeError("has_zero_column: empty matrix");
  for (int c = 0; c < g.cols(); ++c) {
    bool zero = true;
    for (int r = 0; r < g.rows() && zero; ++r)
      if (g(r, c) != 0.0) zero = false;
    if (zero) return true;
  }
  return false;
}

inline bool has_zero_column(const SparseMatrix& g) {
  if (g.rows() == 0 || g.cols() == 0) throw ShapeError("has_zero_column: empty matrix");
  std::vector<char> covered(g.cols(), 0);
  for (const auto& e : g.entries()) covered[e.col] = 1;
  return std::find(covered.begin(), covered.end(), 0) != covered.end();
}

// Plain-text triple format: first line "rows cols nnz", then one
// "row col value" triple per line, 0-indexed.
inline SparseMatrix read_matrix(std::istream& in) {
  int rows = 0, cols = 0;
  long nnz = 0;
  if (!(in >> rows >> cols >> nnz)) throw IoError("matrix read: bad header line");
  std::vector<SparseEntry> entries;
  entries.reserve(static_cast<std::size_t>(std::max(nnz, 0L)));
  for (long i = 0; i < nnz; ++i) {
    SparseEntry e{};
    if (!(in >> e.row >> e.col >> e.value))
      throw IoError("matrix read: bad triple at entry " + std::to_string(i));
    entries.push_back(e);
  }
  return SparseMatrix(rows, cols, std::move(entries));
}

inline void write_matrix(std::ostream& out, const SparseMatrix& m) {
  out << m.rows() << " " << m.cols() << " " << m.nnz() << "\n";
  out.precision(17);
  for (const auto& e : m.entries()) out << e.row << " " << e.col << " " << e.value << "\n";
}

inline SparseMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open matrix file '" + path + "'");
  return read_matrix(in);
}

inline void write_matrix_file(const std::string& path, const SparseMatrix& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write matrix file '" + path + "'");
  write_matrix(out, m);
  if (!out) throw IoError("write failed for matrix file '" + path + "'");
}

inline void write_matrix_file(const std::string& path, const DenseMatrix& m) {
  write_matrix_file(path, SparseMatrix::from_dense(m));
}

}  // namespace srkrp
