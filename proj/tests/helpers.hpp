#pragma once

#include <cmath>
#include <stdexcept>

#include "mufide/linalg.hpp"
#include "mufide/rng.hpp"

namespace test_helpers {

// Dense inversion by Gauss-Jordan with partial pivoting. Deliberately
// independent of the library's Cholesky path; serves as the linear-solve
// oracle.
inline mufide::Matrix gauss_jordan_inverse(mufide::Matrix a) {
  const Eigen::Index n = a.rows();
  mufide::Matrix inv = mufide::Matrix::Identity(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index pivot = col;
    for (Eigen::Index r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (a(pivot, col) == 0.0) throw std::runtime_error("singular");
    if (pivot != col) {
      a.row(pivot).swap(a.row(col));
      inv.row(pivot).swap(inv.row(col));
    }
    const double d = a(col, col);
    a.row(col) /= d;
    inv.row(col) /= d;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a(r, col);
      a.row(r) -= f * a.row(col);
      inv.row(r) -= f * inv.row(col);
    }
  }
  return inv;
}

inline mufide::Matrix random_spd(int n, mufide::Rng& rng, double diag_boost) {
  mufide::Matrix b(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) b(r, c) = rng.uniform(-1.0, 1.0);
  mufide::Matrix a = b.transpose() * b;
  a.diagonal().array() += diag_boost;
  return 0.5 * (a + a.transpose());
}

}  // namespace test_helpers
