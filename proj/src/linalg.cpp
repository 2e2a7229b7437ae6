#include "mufide/linalg.hpp"

#include <cmath>
#include <string>

namespace mufide {

bool all_finite(const Matrix& a) { return a.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

Matrix cholesky(const Matrix& a, double jitter) {
  if (a.rows() != a.cols())
    throw DimensionMismatch("cholesky: matrix is " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + ", expected square");
  if (jitter < 0.0) throw ConfigError("cholesky: jitter must be >= 0");
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (scale > 0.0 && asym > 1e-10 * scale)
    throw DimensionMismatch("cholesky: matrix asymmetry " + std::to_string(asym / scale) +
                            " exceeds 1e-10 relative tolerance");

  Matrix work = a;
  if (jitter > 0.0) work.diagonal().array() += jitter;
  Eigen::LLT<Matrix> llt(work);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("cholesky: non-positive pivot at jitter " + std::to_string(jitter));
  return llt.matrixL();
}

Vector solve_cholesky(const Matrix& l, const Vector& b) {
  if (l.rows() != b.size())
    throw DimensionMismatch("solve_cholesky: factor is " + std::to_string(l.rows()) +
                            " rows, rhs has " + std::to_string(b.size()));
  Vector y = l.triangularView<Eigen::Lower>().solve(b);
  return l.transpose().triangularView<Eigen::Upper>().solve(y);
}

Matrix solve_cholesky(const Matrix& l, const Matrix& b) {
  if (l.rows() != b.rows())
    throw DimensionMismatch("solve_cholesky: factor is " + std::to_string(l.rows()) +
                            " rows, rhs has " + std::to_string(b.rows()));
  Matrix y = l.triangularView<Eigen::Lower>().solve(b);
  return l.transpose().triangularView<Eigen::Upper>().solve(y);
}

double log_det_from_cholesky(const Matrix& l) {
  return 2.0 * l.diagonal().array().log().sum();
}

Matrix cholesky_with_escalation(const Matrix& a, double* used_jitter, double max_jitter) {
  double jitter = 0.0;
  while (true) {
    try {
      Matrix l = cholesky(a, jitter);
      if (used_jitter) *used_jitter = jitter;
      return l;
    } catch (const NotPositiveDefinite&) {
      if (jitter >= max_jitter) throw;
      jitter = (jitter == 0.0) ? 1e-10 : jitter * 10.0;
      if (jitter > max_jitter) jitter = max_jitter;
    }
  }
}

Vector linspace(double lo, double hi, int n) {
  if (n < 1) throw ConfigError("linspace: n must be >= 1");
  Vector out(n);
  if (n == 1) {
    out[0] = lo;
    return out;
  }
  const double h = (hi - lo) / static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) out[i] = lo + h * static_cast<double>(i);
  out[n - 1] = hi;  // endpoint exact regardless of rounding in the increments
  return out;
}

}  // namespace mufide
