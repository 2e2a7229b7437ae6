#pragma once

#include "mufide/errors.hpp"
#include "mufide/linalg.hpp"

namespace mufide {

// Per-column min-max map onto [0, 1]. Columns with zero range map to 0 (and
// inverse-transform back to the stored minimum), so constant features do not
// produce NaN.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;

  static MinMaxScaler fit(const Matrix& x) {
    if (x.rows() == 0 || x.cols() == 0) throw EmptyData("MinMaxScaler::fit: empty matrix");
    MinMaxScaler s;
    s.min_ = x.colwise().minCoeff().transpose();
    s.max_ = x.colwise().maxCoeff().transpose();
    return s;
  }

  static MinMaxScaler fit(const Vector& y) {
    Matrix m(y.size(), 1);
    m.col(0) = y;
    return fit(m);
  }

  int dim() const { return static_cast<int>(min_.size()); }

  Matrix transform(const Matrix& x) const {
    check_cols(x.cols());
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double range = max_[j] - min_[j];
      if (range == 0.0)
        out.col(j).setZero();
      else
        out.col(j) = (x.col(j).array() - min_[j]) / range;
    }
    return out;
  }

  Matrix inverse_transform(const Matrix& x) const {
    check_cols(x.cols());
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j)
      out.col(j) = min_[j] + (max_[j] - min_[j]) * x.col(j).array();
    return out;
  }

  // Single-column conveniences for output scaling.
  double transform1(double v) const {
    check_cols(1);
    const double range = max_[0] - min_[0];
    return range == 0.0 ? 0.0 : (v - min_[0]) / range;
  }
  double inverse1(double v) const {
    check_cols(1);
    return min_[0] + (max_[0] - min_[0]) * v;
  }
  Vector transform1(const Vector& v) const {
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = transform1(v[i]);
    return out;
  }
  Vector inverse1(const Vector& v) const {
    Vector out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = inverse1(v[i]);
    return out;
  }

  // Scaled-unit range, used to express errors in scaled units without
  // transforming whole vectors.
  double range1() const {
    check_cols(1);
    return max_[0] - min_[0];
  }

  const Vector& col_min() const { return min_; }
  const Vector& col_max() const { return max_; }

  // Rebuild from serialized bounds.
  static MinMaxScaler from_bounds(Vector min, Vector max) {
    if (min.size() != max.size() || min.size() == 0)
      throw DimensionMismatch("MinMaxScaler::from_bounds: bound size mismatch");
    MinMaxScaler s;
    s.min_ = std::move(min);
    s.max_ = std::move(max);
    return s;
  }

 private:
  void check_cols(Eigen::Index c) const {
    if (c != min_.size())
      throw DimensionMismatch("MinMaxScaler: expected " + std::to_string(min_.size()) +
                              " columns, got " + std::to_string(c));
  }

  Vector min_;
  Vector max_;
};

}  // namespace mufide
