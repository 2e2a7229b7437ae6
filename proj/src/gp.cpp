#include "mufide/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

#include "mufide/parallel.hpp"

namespace mufide::gp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoOverPi = 2.0 / std::numbers::pi;

}  // namespace

double nngp_safe_ratio(double num, double denom) {
  const double r = num / denom;
  if (r > 1.0) {
    if (r > 1.0 + 1e-12)
      throw DomainError("erf-kernel recursion: arcsin argument " + std::to_string(r));
    return 1.0;
  }
  if (r < -1.0) {
    if (r < -1.0 - 1e-12)
      throw DomainError("erf-kernel recursion: arcsin argument " + std::to_string(r));
    return -1.0;
  }
  return r;
}

Kernel Kernel::rbf(double signal_variance, Vector lengthscales) {
  if (signal_variance <= 0.0) throw ConfigError("rbf kernel: signal variance must be > 0");
  if (lengthscales.size() == 0) throw ConfigError("rbf kernel: no lengthscales");
  if ((lengthscales.array() <= 0.0).any())
    throw ConfigError("rbf kernel: lengthscales must be > 0");
  Kernel k;
  k.kind_ = Kind::kRbf;
  k.params_.push_back(signal_variance);
  for (Eigen::Index i = 0; i < lengthscales.size(); ++i) k.params_.push_back(lengthscales[i]);
  return k;
}

Kernel Kernel::nngp_erf(double bias_variance, double weight_variance, int depth) {
  if (bias_variance <= 0.0 || weight_variance <= 0.0)
    throw ConfigError("erf kernel: variances must be > 0");
  if (depth < 0) throw ConfigError("erf kernel: depth must be >= 0");
  Kernel k;
  k.kind_ = Kind::kNngpErf;
  k.params_ = {bias_variance, weight_variance};
  k.depth_ = depth;
  return k;
}

namespace {

// Self-covariance trajectory of the erf recursion: row i of the result holds
// K^l(x_i, x_i) for levels l = 0..depth (0 = affine base).
Matrix nngp_self_levels(const Matrix& x, double sb2, double sw2, int depth) {
  const Eigen::Index n = x.rows();
  const double d_in = static_cast<double>(x.cols());
  Matrix s(n, depth + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = sb2 + sw2 * x.row(i).squaredNorm() / d_in;
    s(i, 0) = v;
    for (int l = 0; l < depth; ++l) {
      v = sb2 + sw2 * kTwoOverPi * std::asin(nngp_safe_ratio(2.0 * v, 1.0 + 2.0 * v));
      s(i, l + 1) = v;
    }
  }
  return s;
}

double nngp_pair(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b,
                 const Matrix& self_a, Eigen::Index ia, const Matrix& self_b,
                 Eigen::Index ib, double sb2, double sw2, int depth) {
  const double d_in = static_cast<double>(a.size());
  double k = sb2 + sw2 * a.dot(b) / d_in;
  for (int l = 0; l < depth; ++l) {
    const double denom =
        std::sqrt((1.0 + 2.0 * self_a(ia, l)) * (1.0 + 2.0 * self_b(ib, l)));
    k = sb2 + sw2 * kTwoOverPi * std::asin(nngp_safe_ratio(2.0 * k, denom));
  }
  return k;
}

double rbf_pair(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b,
                const std::vector<double>& params) {
  double q = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double z = (a[d] - b[d]) / params[static_cast<std::size_t>(d) + 1];
    q += z * z;
  }
  return params[0] * std::exp(-0.5 * q);
}

}  // namespace

Matrix Kernel::gram(const Matrix& xa, const Matrix& xb) const {
  if (xa.cols() != xb.cols())
    throw DimensionMismatch("kernel gram: input dimension mismatch");
  const Eigen::Index na = xa.rows(), nb = xb.rows();
  Matrix k(na, nb);
  if (kind_ == Kind::kRbf) {
    if (static_cast<Eigen::Index>(params_.size()) != xa.cols() + 1)
      throw DimensionMismatch("rbf kernel: lengthscale count does not match input dim");
    par::parallel_for(na, [&](std::int64_t i) {
      for (Eigen::Index j = 0; j < nb; ++j) k(i, j) = rbf_pair(xa.row(i), xb.row(j), params_);
    });
  } else {
    const double sb2 = params_[0], sw2 = params_[1];
    const Matrix self_a = nngp_self_levels(xa, sb2, sw2, depth_);
    const Matrix self_b = nngp_self_levels(xb, sb2, sw2, depth_);
    par::parallel_for(na, [&](std::int64_t i) {
      for (Eigen::Index j = 0; j < nb; ++j)
        k(i, j) = nngp_pair(xa.row(i), xb.row(j), self_a, i, self_b, j, sb2, sw2, depth_);
    });
  }
  return k;
}

Matrix Kernel::gram_reference(const Matrix& xa, const Matrix& xb) const {
  if (xa.cols() != xb.cols())
    throw DimensionMismatch("kernel gram: input dimension mismatch");
  const Eigen::Index na = xa.rows(), nb = xb.rows();
  Matrix k(na, nb);
  if (kind_ == Kind::kRbf) {
    for (Eigen::Index i = 0; i < na; ++i)
      for (Eigen::Index j = 0; j < nb; ++j) k(i, j) = rbf_pair(xa.row(i), xb.row(j), params_);
  } else {
    const double sb2 = params_[0], sw2 = params_[1];
    const Matrix self_a = nngp_self_levels(xa, sb2, sw2, depth_);
    const Matrix self_b = nngp_self_levels(xb, sb2, sw2, depth_);
    for (Eigen::Index i = 0; i < na; ++i)
      for (Eigen::Index j = 0; j < nb; ++j)
        k(i, j) = nngp_pair(xa.row(i), xb.row(j), self_a, i, self_b, j, sb2, sw2, depth_);
  }
  return k;
}

Vector Kernel::diag(const Matrix& x) const {
  const Eigen::Index n = x.rows();
  Vector d(n);
  if (kind_ == Kind::kRbf) {
    d.setConstant(params_[0]);
  } else {
    const Matrix self = nngp_self_levels(x, params_[0], params_[1], depth_);
    d = self.col(depth_);
  }
  return d;
}

std::vector<double> Kernel::free_params() const { return params_; }

Kernel Kernel::with_free_params(const std::vector<double>& p) const {
  if (p.size() != params_.size())
    throw DimensionMismatch("kernel with_free_params: wrong parameter count");
  Kernel k = *this;
  k.params_ = p;
  return k;
}

std::string Kernel::describe() const {
  std::ostringstream os;
  if (kind_ == Kind::kRbf) {
    os << "rbf(signal_variance=" << params_[0] << ", lengthscales=[";
    for (std::size_t i = 1; i < params_.size(); ++i)
      os << (i > 1 ? "," : "") << params_[i];
    os << "])";
  } else {
    os << "nngp_erf(bias_variance=" << params_[0] << ", weight_variance=" << params_[1]
       << ", depth=" << depth_ << ")";
  }
  return os.str();
}

GprModel GprModel::fit(Kernel k, Matrix x, Vector y, double noise_std) {
  if (x.rows() == 0) throw EmptyData("gpr fit: no training points");
  if (x.rows() != y.size())
    throw DimensionMismatch("gpr fit: input/target count mismatch");
  if (noise_std < 0.0) throw ConfigError("gpr fit: noise must be >= 0");

  GprModel m;
  m.kernel_ = std::move(k);
  m.x_ = std::move(x);
  m.y_ = std::move(y);
  m.noise_std_ = noise_std;

  Matrix ky = m.kernel_.gram(m.x_, m.x_);
  ky.diagonal().array() += noise_std * noise_std;
  m.chol_ = cholesky_with_escalation(ky, &m.jitter_);
  m.alpha_ = solve_cholesky(m.chol_, m.y_);

  const double n = static_cast<double>(m.y_.size());
  m.lml_ = -0.5 * m.y_.dot(m.alpha_) - 0.5 * log_det_from_cholesky(m.chol_) -
           0.5 * n * std::log(2.0 * std::numbers::pi);
  return m;
}

void GprModel::predict(const Matrix& s, Vector& mean, Vector& var) const {
  if (s.cols() != x_.cols())
    throw DimensionMismatch("gpr predict: input dimension mismatch");
  const Matrix ks = kernel_.gram(s, x_);  // M x N, parallel inside
  mean = ks * alpha_;
  const Matrix v = chol_.triangularView<Eigen::Lower>().solve(ks.transpose());
  var = kernel_.diag(s) - v.colwise().squaredNorm().transpose();
}

void GprModel::predict_reference(const Matrix& s, Vector& mean, Vector& var) const {
  const Eigen::Index m = s.rows();
  mean.resize(m);
  var.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Matrix ks = kernel_.gram_reference(s.row(i), x_);
    mean[i] = (ks * alpha_)(0);
    const Matrix v = chol_.triangularView<Eigen::Lower>().solve(ks.transpose());
    var[i] = kernel_.diag(s.row(i))(0) - v.col(0).squaredNorm();
  }
}

Vector GprModel::predict_mean(const Matrix& s) const {
  Vector mean, var;
  predict(s, mean, var);
  return mean;
}

Matrix lmc_block(const LmcWeights& w, int level_a, int level_b, const Kernel& k1,
                 const Kernel& k2, const Matrix& xa, const Matrix& xb) {
  if (level_a < 0 || level_a > 1 || level_b < 0 || level_b > 1)
    throw ConfigError("lmc_block: level must be 0 or 1");
  Matrix out = Matrix::Zero(xa.rows(), xb.rows());
  const double c1 = w(level_a, 0) * w(level_b, 0);
  const double c2 = w(level_a, 1) * w(level_b, 1);
  if (c1 != 0.0) out.noalias() += c1 * k1.gram(xa, xb);
  if (c2 != 0.0) out.noalias() += c2 * k2.gram(xa, xb);
  return out;
}

namespace {

Vector lmc_diag(const LmcWeights& w, int level, const Kernel& k1, const Kernel& k2,
                const Matrix& x) {
  Vector d = Vector::Zero(x.rows());
  const double c1 = w(level, 0) * w(level, 0);
  const double c2 = w(level, 1) * w(level, 1);
  if (c1 != 0.0) d += c1 * k1.diag(x);
  if (c2 != 0.0) d += c2 * k2.diag(x);
  return d;
}

LmcWeights ar1_weights(double rho) {
  LmcWeights w;
  w << 1.0, 0.0, rho, 1.0;
  return w;
}

}  // namespace

CoKrigingModel CoKrigingModel::fit(Kernel k1, Kernel k2, double rho, Matrix x_lf,
                                   Vector y_lf, Matrix x_hf, Vector y_hf,
                                   double noise_std_lf, double noise_std_hf) {
  if (x_lf.rows() == 0 || x_hf.rows() == 0)
    throw EmptyData("cokriging fit: both fidelity sets must be non-empty");
  if (x_lf.rows() != y_lf.size() || x_hf.rows() != y_hf.size())
    throw DimensionMismatch("cokriging fit: input/target count mismatch");
  if (x_lf.cols() != x_hf.cols())
    throw DimensionMismatch("cokriging fit: fidelity input dimensions differ");

  CoKrigingModel m;
  m.k1_ = std::move(k1);
  m.k2_ = std::move(k2);
  m.rho_ = rho;
  m.x_lf_ = std::move(x_lf);
  m.x_hf_ = std::move(x_hf);
  m.y_lf_ = std::move(y_lf);
  m.y_hf_ = std::move(y_hf);
  m.noise_lf_ = noise_std_lf;
  m.noise_hf_ = noise_std_hf;

  const Eigen::Index nl = m.x_lf_.rows(), nh = m.x_hf_.rows();
  const LmcWeights w = ar1_weights(rho);
  Matrix ky(nl + nh, nl + nh);
  ky.topLeftCorner(nl, nl) = lmc_block(w, 0, 0, m.k1_, m.k2_, m.x_lf_, m.x_lf_);
  ky.topRightCorner(nl, nh) = lmc_block(w, 0, 1, m.k1_, m.k2_, m.x_lf_, m.x_hf_);
  ky.bottomLeftCorner(nh, nl) = lmc_block(w, 1, 0, m.k1_, m.k2_, m.x_hf_, m.x_lf_);
  ky.bottomRightCorner(nh, nh) = lmc_block(w, 1, 1, m.k1_, m.k2_, m.x_hf_, m.x_hf_);
  ky.diagonal().head(nl).array() += noise_std_lf * noise_std_lf;
  ky.diagonal().tail(nh).array() += noise_std_hf * noise_std_hf;

  Vector y(nl + nh);
  y.head(nl) = m.y_lf_;
  y.tail(nh) = m.y_hf_;

  m.chol_ = cholesky_with_escalation(ky, &m.jitter_);
  m.alpha_ = solve_cholesky(m.chol_, y);
  const double n = static_cast<double>(nl + nh);
  m.lml_ = -0.5 * y.dot(m.alpha_) - 0.5 * log_det_from_cholesky(m.chol_) -
           0.5 * n * std::log(2.0 * std::numbers::pi);
  return m;
}

void CoKrigingModel::predict_hf(const Matrix& s, Vector& mean, Vector& var) const {
  if (s.cols() != x_lf_.cols())
    throw DimensionMismatch("cokriging predict: input dimension mismatch");
  const Eigen::Index nl = x_lf_.rows(), nh = x_hf_.rows();
  const LmcWeights w = ar1_weights(rho_);
  Matrix cross(s.rows(), nl + nh);
  cross.leftCols(nl) = lmc_block(w, 1, 0, k1_, k2_, s, x_lf_);
  cross.rightCols(nh) = lmc_block(w, 1, 1, k1_, k2_, s, x_hf_);
  mean = cross * alpha_;
  const Matrix v = chol_.triangularView<Eigen::Lower>().solve(cross.transpose());
  var = lmc_diag(w, 1, k1_, k2_, s) - v.colwise().squaredNorm().transpose();
}

Vector CoKrigingModel::predict_hf_mean(const Matrix& s) const {
  Vector mean, var;
  predict_hf(s, mean, var);
  return mean;
}

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, Vector x0,
                             double initial_step, int max_iters) {
  const int n = static_cast<int>(x0.size());
  const double alpha = 1.0, gamma = 2.0, beta = 0.5, sigma = 0.5;

  std::vector<Vector> xs(static_cast<std::size_t>(n) + 1, x0);
  std::vector<double> fx(static_cast<std::size_t>(n) + 1);
  int evals = 0;
  auto eval = [&](const Vector& v) {
    ++evals;
    const double r = f(v);
    return std::isnan(r) ? kInf : r;
  };
  fx[0] = eval(xs[0]);
  for (int i = 0; i < n; ++i) {
    xs[static_cast<std::size_t>(i) + 1][i] += initial_step;
    fx[static_cast<std::size_t>(i) + 1] = eval(xs[static_cast<std::size_t>(i) + 1]);
  }

  std::vector<int> order(static_cast<std::size_t>(n) + 1);
  for (int iter = 0; iter < max_iters; ++iter) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fx[static_cast<std::size_t>(a)] < fx[static_cast<std::size_t>(b)]; });
    const int ib = order[0], iw = order[static_cast<std::size_t>(n)];
    const int is = order[static_cast<std::size_t>(n) - 1];

    if (!std::isfinite(fx[static_cast<std::size_t>(ib)])) break;  // nowhere to orient
    if (fx[static_cast<std::size_t>(iw)] - fx[static_cast<std::size_t>(ib)] <
        1e-10 * (1.0 + std::abs(fx[static_cast<std::size_t>(ib)])))
      break;

    Vector centroid = Vector::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != iw) centroid += xs[static_cast<std::size_t>(i)];
    centroid /= static_cast<double>(n);

    const Vector xr = centroid + alpha * (centroid - xs[static_cast<std::size_t>(iw)]);
    const double fr = eval(xr);
    if (fr < fx[static_cast<std::size_t>(ib)]) {
      const Vector xe = centroid + gamma * (xr - centroid);
      const double fe = eval(xe);
      if (fe < fr) {
        xs[static_cast<std::size_t>(iw)] = xe;
        fx[static_cast<std::size_t>(iw)] = fe;
      } else {
        xs[static_cast<std::size_t>(iw)] = xr;
        fx[static_cast<std::size_t>(iw)] = fr;
      }
    } else if (fr < fx[static_cast<std::size_t>(is)]) {
      xs[static_cast<std::size_t>(iw)] = xr;
      fx[static_cast<std::size_t>(iw)] = fr;
    } else {
      const bool outside = fr < fx[static_cast<std::size_t>(iw)];
      const Vector base = outside ? xr : xs[static_cast<std::size_t>(iw)];
      const Vector xc = centroid + beta * (base - centroid);
      const double fc = eval(xc);
      if (fc < std::min(fr, fx[static_cast<std::size_t>(iw)])) {
        xs[static_cast<std::size_t>(iw)] = xc;
        fx[static_cast<std::size_t>(iw)] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == ib) continue;
          xs[static_cast<std::size_t>(i)] =
              xs[static_cast<std::size_t>(ib)] +
              sigma * (xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(ib)]);
          fx[static_cast<std::size_t>(i)] = eval(xs[static_cast<std::size_t>(i)]);
        }
      }
    }
  }

  NelderMeadResult res;
  std::size_t best = 0;
  for (std::size_t i = 1; i < fx.size(); ++i)
    if (fx[i] < fx[best]) best = i;
  res.x = xs[best];
  res.value = fx[best];
  res.evals = evals;
  return res;
}

namespace {

struct StartOutcome {
  Vector x;
  double value = kInf;
};

// Runs the shared multi-start scheme over an objective on R^k. start_point
// builds the initial vector for a start index from its derived rng.
std::vector<StartOutcome> multi_start(const std::function<double(const Vector&)>& objective,
                                      const std::function<Vector(int, Rng&)>& start_point,
                                      const MleOptions& opt) {
  std::vector<StartOutcome> outs(static_cast<std::size_t>(opt.n_starts));
  par::parallel_for(opt.n_starts, [&](std::int64_t s) {
    Rng rng = Rng(opt.seed).derive(static_cast<std::uint64_t>(s));
    Vector x0 = start_point(static_cast<int>(s), rng);
    NelderMeadResult r = nelder_mead(objective, std::move(x0), 0.5, opt.max_iters);
    outs[static_cast<std::size_t>(s)] = {r.x, r.value};
  });
  return outs;
}

const StartOutcome& pick_best(const std::vector<StartOutcome>& outs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < outs.size(); ++i)
    if (outs[i].value < outs[best].value) best = i;
  if (!std::isfinite(outs[best].value))
    throw OptimizationFailed("hyperparameter search: every restart failed");
  return outs[best];
}

// One extra descent from the winner with a tighter simplex; Nelder-Mead
// restarts escape degenerate simplices the first pass can collapse into.
StartOutcome polish(const std::function<double(const Vector&)>& objective,
                    const StartOutcome& best, const MleOptions& opt) {
  NelderMeadResult r = nelder_mead(objective, best.x, 0.2, opt.max_iters);
  return r.value < best.value ? StartOutcome{r.x, r.value} : best;
}

double log_uniform_start(Rng& rng) {
  // Starts drawn inside [1e-2, 1e2]: the bound box extends to 1e4 but starts
  // out on the plateau stall immediately.
  return rng.uniform(std::log(1e-2), std::log(1e2));
}

// Starting values sized to the data: variance-like parameters near var(y),
// lengthscales near a quarter of the per-dimension input span. Only a start;
// the search owns the final values.
std::vector<double> scaled_start(const Kernel& k, const Matrix& x, const Vector& y) {
  const double var_y =
      std::clamp((y.array() - y.mean()).square().mean(), 1e-3, 1e3);
  std::vector<double> p;
  if (k.kind() == Kernel::Kind::kRbf) {
    p.push_back(var_y);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double span = x.col(j).maxCoeff() - x.col(j).minCoeff();
      p.push_back(std::clamp(span / 4.0, 1e-3, 1e3));
    }
  } else {
    p.push_back(var_y);
    p.push_back(var_y);
  }
  return p;
}

// Through-origin least squares of the high-fidelity outputs against the
// nearest low-fidelity observation, as a starting scale factor.
double rho_start(const Matrix& x_lf, const Vector& y_lf, const Matrix& x_hf,
                 const Vector& y_hf) {
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < x_hf.rows(); ++i) {
    Eigen::Index nearest = 0;
    double best = kInf;
    for (Eigen::Index j = 0; j < x_lf.rows(); ++j) {
      const double d = (x_lf.row(j) - x_hf.row(i)).squaredNorm();
      if (d < best) {
        best = d;
        nearest = j;
      }
    }
    num += y_hf[i] * y_lf[nearest];
    den += y_lf[nearest] * y_lf[nearest];
  }
  return den > 0.0 ? num / den : 1.0;
}

}  // namespace

GprModel fit_gpr(const Kernel& init, const Matrix& x, const Vector& y,
                 const MleOptions& opt) {
  const std::size_t np = init.free_params().size();
  const double lo = std::log(opt.lower), hi = std::log(opt.upper);

  auto objective = [&](const Vector& theta) -> double {
    std::vector<double> p(np);
    for (std::size_t i = 0; i < np; ++i) {
      if (theta[static_cast<Eigen::Index>(i)] < lo || theta[static_cast<Eigen::Index>(i)] > hi)
        return kInf;
      p[i] = std::exp(theta[static_cast<Eigen::Index>(i)]);
    }
    try {
      return -GprModel::fit(init.with_free_params(p), x, y, opt.noise_std_hf)
                  .log_marginal_likelihood();
    } catch (const NumericalError&) {
      return kInf;
    }
  };

  auto start_point = [&](int s, Rng& rng) {
    Vector t(static_cast<Eigen::Index>(np));
    if (s == 0) {
      const auto p = init.free_params();
      for (std::size_t i = 0; i < np; ++i)
        t[static_cast<Eigen::Index>(i)] = std::log(std::clamp(p[i], 1e-2, 1e2));
    } else if (s == 1) {
      const auto p = scaled_start(init, x, y);
      for (std::size_t i = 0; i < np; ++i) t[static_cast<Eigen::Index>(i)] = std::log(p[i]);
    } else {
      for (std::size_t i = 0; i < np; ++i) t[static_cast<Eigen::Index>(i)] = log_uniform_start(rng);
    }
    return t;
  };

  const StartOutcome best =
      polish(objective, pick_best(multi_start(objective, start_point, opt)), opt);
  std::vector<double> p(np);
  for (std::size_t i = 0; i < np; ++i) p[i] = std::exp(best.x[static_cast<Eigen::Index>(i)]);
  return GprModel::fit(init.with_free_params(p), x, y, opt.noise_std_hf);
}

CoKrigingModel fit_cokriging(const Kernel& k1_init, const Kernel& k2_init,
                             const Matrix& x_lf, const Vector& y_lf, const Matrix& x_hf,
                             const Vector& y_hf, const MleOptions& opt) {
  const std::size_t n1 = k1_init.free_params().size();
  const std::size_t n2 = k2_init.free_params().size();
  const std::size_t np = n1 + n2 + 1;  // + rho, unconstrained
  const double lo = std::log(opt.lower), hi = std::log(opt.upper);

  // Two-stage warm start (low-fidelity fit, then scale-and-residual fit).
  // The joint search below owns the final values; this only places one start
  // inside the right basin, which the joint likelihood's many cliffs of
  // failed factorizations otherwise make hard to reach.
  std::vector<double> p1_warm = k1_init.free_params();
  std::vector<double> p2_warm = k2_init.free_params();
  double rho_warm = rho_start(x_lf, y_lf, x_hf, y_hf);
  try {
    MleOptions inner = opt;
    inner.n_starts = std::max(4, opt.n_starts / 2);
    inner.seed = Rng(opt.seed).derive(0xA).next_u64();
    const GprModel lf_fit = fit_gpr(k1_init, x_lf, y_lf, inner);
    p1_warm = lf_fit.kernel().free_params();
    const Vector m = lf_fit.predict_mean(x_hf);
    const double den = m.squaredNorm();
    if (den > 0.0) rho_warm = y_hf.dot(m) / den;
    inner.seed = Rng(opt.seed).derive(0xB).next_u64();
    const Vector resid = y_hf - rho_warm * m;
    p2_warm = fit_gpr(k2_init, x_hf, resid, inner).kernel().free_params();
  } catch (const NumericalError&) {
    // keep the plain starts
  }

  auto unpack = [&](const Vector& theta, std::vector<double>& p1, std::vector<double>& p2,
                    double& rho) -> bool {
    for (std::size_t i = 0; i < n1 + n2; ++i)
      if (theta[static_cast<Eigen::Index>(i)] < lo || theta[static_cast<Eigen::Index>(i)] > hi)
        return false;
    p1.resize(n1);
    p2.resize(n2);
    for (std::size_t i = 0; i < n1; ++i) p1[i] = std::exp(theta[static_cast<Eigen::Index>(i)]);
    for (std::size_t i = 0; i < n2; ++i)
      p2[i] = std::exp(theta[static_cast<Eigen::Index>(n1 + i)]);
    rho = theta[static_cast<Eigen::Index>(n1 + n2)];
    return true;
  };

  auto objective = [&](const Vector& theta) -> double {
    std::vector<double> p1, p2;
    double rho = 0.0;
    if (!unpack(theta, p1, p2, rho)) return kInf;
    try {
      return -CoKrigingModel::fit(k1_init.with_free_params(p1), k2_init.with_free_params(p2),
                                  rho, x_lf, y_lf, x_hf, y_hf, opt.noise_std_lf,
                                  opt.noise_std_hf)
                  .log_marginal_likelihood();
    } catch (const NumericalError&) {
      return kInf;
    }
  };

  auto pack = [&](Vector& t, const std::vector<double>& p1, const std::vector<double>& p2,
                  double rho) {
    for (std::size_t i = 0; i < n1; ++i)
      t[static_cast<Eigen::Index>(i)] = std::log(std::clamp(p1[i], opt.lower, opt.upper));
    for (std::size_t i = 0; i < n2; ++i)
      t[static_cast<Eigen::Index>(n1 + i)] = std::log(std::clamp(p2[i], opt.lower, opt.upper));
    t[static_cast<Eigen::Index>(n1 + n2)] = rho;
  };

  auto start_point = [&](int s, Rng& rng) {
    Vector t(static_cast<Eigen::Index>(np));
    if (s == 0) {
      pack(t, p1_warm, p2_warm, rho_warm);
    } else if (s == 1) {
      pack(t, k1_init.free_params(), k2_init.free_params(), rho_warm);
    } else if (s == 2) {
      pack(t, scaled_start(k1_init, x_lf, y_lf), scaled_start(k2_init, x_hf, y_hf), rho_warm);
    } else {
      for (std::size_t i = 0; i < n1 + n2; ++i)
        t[static_cast<Eigen::Index>(i)] = log_uniform_start(rng);
      t[static_cast<Eigen::Index>(n1 + n2)] = rng.normal(rho_warm, 1.0);
    }
    return t;
  };

  const StartOutcome best =
      polish(objective, pick_best(multi_start(objective, start_point, opt)), opt);
  std::vector<double> p1, p2;
  double rho = 0.0;
  unpack(best.x, p1, p2, rho);
  return CoKrigingModel::fit(k1_init.with_free_params(p1), k2_init.with_free_params(p2), rho,
                             x_lf, y_lf, x_hf, y_hf, opt.noise_std_lf, opt.noise_std_hf);
}

}  // namespace mufide::gp
