#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mufide/linalg.hpp"
#include "mufide/rng.hpp"

namespace mufide::gp {

// Guard for the arcsin argument of the erf-network kernel recursion: the
// exact ratio lies in [-1, 1]; roundoff excursions up to 1e-12 are clamped,
// anything larger is a real domain violation.
double nngp_safe_ratio(double num, double denom);

// Stationary squared-exponential (per-dimension lengthscales) or the
// compositional kernel of an infinite-width erf network.
class Kernel {
 public:
  enum class Kind { kRbf, kNngpErf };

  static Kernel rbf(double signal_variance, Vector lengthscales);
  // depth counts arcsin recursion steps (hidden layers of the inducing
  // network); depth 0 is the affine base kernel.
  static Kernel nngp_erf(double bias_variance, double weight_variance, int depth = 3);

  Kind kind() const { return kind_; }
  int depth() const { return depth_; }

  // Cross-covariance matrix kappa(xa_i, xb_j). Parallel over rows of xa;
  // every entry is computed independently, so the result does not depend on
  // the thread count.
  Matrix gram(const Matrix& xa, const Matrix& xb) const;
  // Serial reference of the same computation, kept for testing and the
  // kernel benchmark.
  Matrix gram_reference(const Matrix& xa, const Matrix& xb) const;
  // kappa(x_i, x_i) for each row.
  Vector diag(const Matrix& x) const;

  // Positive hyperparameters as a flat vector (rbf: signal variance then
  // lengthscales; nngp: bias variance, weight variance). depth is structural
  // and not part of the vector.
  std::vector<double> free_params() const;
  Kernel with_free_params(const std::vector<double>& p) const;

  double signal_variance() const { return params_[0]; }
  const std::vector<double>& raw_params() const { return params_; }
  std::string describe() const;

 private:
  Kernel() = default;
  double pair_value(const Vector& a, const Vector& b) const;

  Kind kind_ = Kind::kRbf;
  std::vector<double> params_;  // rbf: [sv, l_1..l_d]; nngp: [sb2, sw2]
  int depth_ = 0;
};

// Exact GP regression with fixed observation noise. Training targets are
// used in their original units; no internal rescaling.
class GprModel {
 public:
  static GprModel fit(Kernel k, Matrix x, Vector y, double noise_std = 1e-5);

  // Posterior mean and variance at the rows of s. Variance may carry
  // roundoff as low as -1e-10; it is reported unclamped. Parallel over row
  // chunks of s.
  void predict(const Matrix& s, Vector& mean, Vector& var) const;
  // One-point-at-a-time serial reference for the prediction kernel.
  void predict_reference(const Matrix& s, Vector& mean, Vector& var) const;
  Vector predict_mean(const Matrix& s) const;

  double log_marginal_likelihood() const { return lml_; }
  const Kernel& kernel() const { return kernel_; }
  double noise_std() const { return noise_std_; }
  double used_jitter() const { return jitter_; }
  int train_size() const { return static_cast<int>(y_.size()); }
  // Training set, kept for model files (a saved model refits from its data).
  const Matrix& train_x() const { return x_; }
  const Vector& train_y() const { return y_; }

 private:
  Kernel kernel_ = Kernel::rbf(1.0, Vector::Ones(1));
  Matrix x_;
  Vector y_;
  Matrix chol_;
  Vector alpha_;
  double noise_std_ = 0.0;
  double jitter_ = 0.0;
  double lml_ = 0.0;
};

// Mixing weights of a two-latent linear model of coregionalization over the
// fidelity levels (row = level: 0 low, 1 high; col = latent process).
using LmcWeights = Eigen::Matrix2d;

// Cross-covariance block between two fidelity levels:
//   cov(f_la(xa), f_lb(xb)) = sum_j w(la, j) w(lb, j) kappa_j(xa, xb).
Matrix lmc_block(const LmcWeights& w, int level_a, int level_b, const Kernel& k1,
                 const Kernel& k2, const Matrix& xa, const Matrix& xb);

// Autoregressive two-fidelity GP: f_L = u1, f_H = rho * u1 + u2, with u1 ~
// GP(0, k1) and u2 ~ GP(0, k2) independent; equivalently the LMC above with
// weights [[1, 0], [rho, 1]]. Both fidelities share one joint Gaussian.
class CoKrigingModel {
 public:
  static CoKrigingModel fit(Kernel k1, Kernel k2, double rho, Matrix x_lf, Vector y_lf,
                            Matrix x_hf, Vector y_hf, double noise_std_lf = 1e-5,
                            double noise_std_hf = 1e-5);

  // Posterior of the high-fidelity output.
  void predict_hf(const Matrix& s, Vector& mean, Vector& var) const;
  Vector predict_hf_mean(const Matrix& s) const;

  double log_marginal_likelihood() const { return lml_; }
  double rho() const { return rho_; }
  const Kernel& lf_kernel() const { return k1_; }
  const Kernel& residual_kernel() const { return k2_; }
  double noise_std_lf() const { return noise_lf_; }
  double noise_std_hf() const { return noise_hf_; }
  double used_jitter() const { return jitter_; }
  // Training sets, kept for model files (a saved model refits from its data).
  const Matrix& train_x_lf() const { return x_lf_; }
  const Matrix& train_x_hf() const { return x_hf_; }
  const Vector& train_y_lf() const { return y_lf_; }
  const Vector& train_y_hf() const { return y_hf_; }

 private:
  Kernel k1_ = Kernel::rbf(1.0, Vector::Ones(1));
  Kernel k2_ = Kernel::rbf(1.0, Vector::Ones(1));
  double rho_ = 1.0;
  Matrix x_lf_, x_hf_;
  Vector y_lf_, y_hf_;
  Matrix chol_;
  Vector alpha_;
  double noise_lf_ = 0.0, noise_hf_ = 0.0;
  double jitter_ = 0.0;
  double lml_ = 0.0;
};

// Maximum-likelihood hyperparameter selection by multi-start Nelder-Mead.
// Positive kernel parameters are searched in log space inside [lower, upper];
// the regression weight rho (co-kriging only) is searched unconstrained.
// Observation noise is fixed, never optimized. Proposals outside the bounds
// or failing the factorization score +inf. Restarts run in parallel with
// seeds derived from (seed, start index); ties break toward the lower start
// index, so the outcome is thread-count independent.
struct MleOptions {
  int n_starts = 10;
  int max_iters = 400;       // Nelder-Mead iterations per start
  double lower = 1e-4;
  double upper = 1e4;
  double noise_std_lf = 1e-5;
  double noise_std_hf = 1e-5;
  std::uint64_t seed = 0;
};

GprModel fit_gpr(const Kernel& init, const Matrix& x, const Vector& y,
                 const MleOptions& opt);
CoKrigingModel fit_cokriging(const Kernel& k1_init, const Kernel& k2_init,
                             const Matrix& x_lf, const Vector& y_lf, const Matrix& x_hf,
                             const Vector& y_hf, const MleOptions& opt);

// Generic Nelder-Mead minimizer used by the MLE drivers (exposed for tests).
// Returns the best vertex found. f may return +inf to reject a point.
struct NelderMeadResult {
  Vector x;
  double value = 0.0;
  int evals = 0;
};
NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, Vector x0,
                             double initial_step, int max_iters);

}  // namespace mufide::gp
