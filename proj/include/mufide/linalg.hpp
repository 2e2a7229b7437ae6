#pragma once

#include <Eigen/Dense>

#include "mufide/errors.hpp"

namespace mufide {

// Dense row-major double matrix: the single matrix type used throughout the
// library. Row-major storage keeps flat serialization order equal to the
// (row, col) iteration order used by the file formats.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// True when every entry is finite.
bool all_finite(const Matrix& a);
bool all_finite(const Vector& v);

// Lower-triangular Cholesky factor L with (a + jitter * I) = L * L^T.
//
// Preconditions: a square and symmetric to within 1e-10 relative asymmetry,
// jitter >= 0. Throws DimensionMismatch on shape/symmetry violations and
// NotPositiveDefinite when a pivot fails even after the jitter is applied.
Matrix cholesky(const Matrix& a, double jitter = 0.0);

// Solves (L L^T) x = b given the factor from cholesky(). Forward then back
// substitution; no refinement.
Vector solve_cholesky(const Matrix& l, const Vector& b);
Matrix solve_cholesky(const Matrix& l, const Matrix& b);

// log(det(L L^T)) = 2 * sum(log(diag(L))).
double log_det_from_cholesky(const Matrix& l);

// Cholesky with the library's escalation ladder: exact first, then jitter
// 1e-10 growing geometrically (x10) up to max_jitter. The jitter that
// succeeded is written to used_jitter when non-null. Throws
// NotPositiveDefinite when the ladder is exhausted.
Matrix cholesky_with_escalation(const Matrix& a, double* used_jitter = nullptr,
                                double max_jitter = 1e-6);

// Equally spaced inclusive grid: n points from lo to hi, constant spacing,
// both endpoints exact. n >= 2 (n == 1 yields {lo}).
Vector linspace(double lo, double hi, int n);

}  // namespace mufide
