#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "srkrp/error.hpp"
#include "srkrp/matrix.hpp"

namespace srkrp {

// Cutoff below which a singular value counts as zero. The default is the
// standard pseudo-inverse policy tau = max(rows, cols) * sigma_max * eps;
// an absolute override is available for experiments.
struct RankTolerance {
  std::optional<double> absolute;

  static RankTolerance standard() { return {}; }
  static RankTolerance absolute_cutoff(double tau) { return {tau}; }

  double threshold(int rows, int cols, double sigma_max) const {
    if (absolute) return *absolute;
    return static_cast<double>(std::max(rows, cols)) * sigma_max *
           std::numeric_limits<double>::epsilon();
  }
};

// Singular values in descending order (LAPACK dgesdd, values only). The
// column-major call on the row-major buffer sees the transpose, which has the
// same singular values.
inline std::vector<double> singular_values(const DenseMatrix& m) {
  if (m.empty()) throw ShapeError("singular_values: empty matrix");
  std::vector<double> a(m.entries());
  std::vector<double> s(std::min(m.rows(), m.cols()));
  int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', m.cols(), m.rows(), a.data(), m.cols(),
                            s.data(), nullptr, 1, nullptr, 1);
  if (info < 0) throw ParameterError("singular_values: bad argument " + std::to_string(-info));
  if (info > 0) throw NumericalError("singular_values: SVD did not converge");
  return s;
}

inline int numerical_rank(const DenseMatrix& m, const RankTolerance& tol = {}) {
  std::vector<double> s = singular_values(m);
  double tau = tol.threshold(m.rows(), m.cols(), s.front());
  int rank = 0;
  for (double sigma : s)
    if (sigma > tau) ++rank;
  return rank;
}

inline double spectral_norm(const DenseMatrix& m) { return singular_values(m).front(); }

inline double frobenius_norm(const DenseMatrix& m) {
  double acc = 0.0;
  for (double v : m.entries()) acc += v * v;
  return std::sqrt(acc);
}

enum class MatrixNorm { spectral, frobenius };

inline double matrix_norm(const DenseMatrix& m, MatrixNorm norm) {
  return norm == MatrixNorm::spectral ? spectral_norm(m) : frobenius_norm(m);
}

inline const char* to_string(MatrixNorm norm) {
  return norm == MatrixNorm::spectral ? "spectral" : "frobenius";
}

inline MatrixNorm parse_matrix_norm(const std::string& text) {
  if (text == "spectral") return MatrixNorm::spectral;
  if (text == "frobenius") return MatrixNorm::frobenius;
  throw ConfigError("unknown norm '" + text + "' (expected spectral or frobenius)");
}

namespace detail {
using EigenRowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
}

// Minimum-norm-residual solve of g*x = y, one column of x per column of y.
// Column-pivoted QR, factored once and reused for every right-hand side.
// Requires full column rank; the caller normally ran the rank gate already,
// but the factorization's own rank estimate is checked as a backstop.
inline DenseMatrix least_squares_solve(const DenseMatrix& g, const DenseMatrix& y) {
  if (g.rows() != y.rows())
    throw ShapeError("least squares: lhs is " + std::to_string(g.rows()) + "x" +
                     std::to_string(g.cols()) + " but rhs has " + std::to_string(y.rows()) +
                     " rows");
  if (g.rows() < g.cols())
    throw ShapeError("least squares: underdetermined system " + std::to_string(g.rows()) + "x" +
                     std::to_string(g.cols()));
  Eigen::MatrixXd lhs = detail::EigenRowMajorMap(g.data(), g.rows(), g.cols());
  Eigen::MatrixXd rhs = detail::EigenRowMajorMap(y.data(), y.rows(), y.cols());
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lhs);
  if (qr.rank() < g.cols())
    throw RankDeficientError("least squares: rank " + std::to_string(qr.rank()) + " < " +
                                 std::to_string(g.cols()) + " columns",
                             static_cast<int>(qr.rank()));
  Eigen::MatrixXd x = qr.solve(rhs);
  DenseMatrix out(g.cols(), y.cols());
  for (int r = 0; r < out.rows(); ++r)
    for (int c = 0; c < out.cols(); ++c) out(r, c) = x(r, c);
  return out;
}

}  // namespace srkrp
