#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "mufide/gp.hpp"
#include "mufide/linalg.hpp"
#include "mufide/rng.hpp"

using namespace mufide;
using namespace mufide::gp;

namespace {

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Vector vec(std::initializer_list<double> v) {
  Vector m(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) m[i++] = x;
  return m;
}

// Independent erf-recursion reimplementation in extended precision,
// restructured around explicit level arrays.
double nngp_oracle(double xa, double xb, double sb2, double sw2, int depth) {
  long double kaa = sb2 + sw2 * xa * xa;
  long double kbb = sb2 + sw2 * xb * xb;
  long double kab = sb2 + sw2 * xa * xb;
  for (int l = 0; l < depth; ++l) {
    const long double next_ab =
        sb2 + sw2 * (2.0L / std::numbers::pi_v<long double>) *
                  std::asin(2.0L * kab / std::sqrt((1.0L + 2.0L * kaa) * (1.0L + 2.0L * kbb)));
    kaa = sb2 + sw2 * (2.0L / std::numbers::pi_v<long double>) *
                  std::asin(2.0L * kaa / (1.0L + 2.0L * kaa));
    kbb = sb2 + sw2 * (2.0L / std::numbers::pi_v<long double>) *
                  std::asin(2.0L * kbb / (1.0L + 2.0L * kbb));
    kab = next_ab;
  }
  return static_cast<double>(kab);
}

}  // namespace

TEST_CASE("rbf kernel closed form") {
  Kernel k = Kernel::rbf(2.0, vec({0.5}));
  Matrix a = col({0.0, 0.5});
  Matrix g = k.gram(a, a);
  CHECK(g(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(g(1, 1) == doctest::Approx(2.0).epsilon(1e-15));
  // distance 0.5 = one lengthscale -> sv * exp(-1/2)
  CHECK(g(0, 1) == doctest::Approx(2.0 * std::exp(-0.5)).epsilon(1e-14));
  CHECK(g(0, 1) == g(1, 0));
}

TEST_CASE("rbf with per-dimension lengthscales") {
  Kernel k = Kernel::rbf(1.0, vec({1.0, 0.1}));
  Matrix a(1, 2), b(1, 2);
  a << 0.0, 0.0;
  b << 1.0, 0.1;  // one lengthscale along each axis
  CHECK(k.gram(a, b)(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("parallel gram equals the serial reference bitwise") {
  Rng rng(31);
  Matrix x(40, 2);
  for (int r = 0; r < 40; ++r)
    for (int c = 0; c < 2; ++c) x(r, c) = rng.uniform(-1.0, 1.0);
  for (Kernel k : {Kernel::rbf(1.3, vec({0.4, 0.7})), Kernel::nngp_erf(0.6, 1.4, 3)}) {
    Matrix fast = k.gram(x, x);
    Matrix ref = k.gram_reference(x, x);
    CHECK((fast - ref).cwiseAbs().maxCoeff() == 0.0);
    // exact symmetry (needed by the factorization precondition)
    CHECK((fast - fast.transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("erf kernel matches the extended-precision recursion oracle") {
  Rng rng(32);
  for (int depth : {0, 1, 2, 3, 5}) {
    Kernel k = Kernel::nngp_erf(0.8, 1.2, depth);
    for (int rep = 0; rep < 50; ++rep) {
      const double xa = rng.uniform(-2.0, 2.0);
      const double xb = rng.uniform(-2.0, 2.0);
      const double got = k.gram(col({xa}), col({xb}))(0, 0);
      const double want = nngp_oracle(xa, xb, 0.8, 1.2, depth);
      CHECK(got == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("erf kernel diag equals the gram diagonal") {
  Kernel k = Kernel::nngp_erf(1.0, 1.0, 3);
  Matrix x = col({-1.5, -0.3, 0.0, 0.7, 2.0});
  Vector d = k.diag(x);
  Matrix g = k.gram(x, x);
  for (int i = 0; i < 5; ++i) CHECK(d[i] == doctest::Approx(g(i, i)).epsilon(1e-14));
}

TEST_CASE("erf base level at the origin is the bias variance") {
  Kernel k = Kernel::nngp_erf(0.7, 2.0, 0);
  CHECK(k.gram(col({0.0}), col({0.0}))(0, 0) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("arcsin guard clamps roundoff and rejects real violations") {
  CHECK(nngp_safe_ratio(1.0 + 5e-13, 1.0) == 1.0);
  CHECK(nngp_safe_ratio(-1.0 - 5e-13, 1.0) == -1.0);
  CHECK(nngp_safe_ratio(0.5, 1.0) == 0.5);
  CHECK_THROWS_AS(nngp_safe_ratio(1.0 + 1e-9, 1.0), DomainError);
  CHECK_THROWS_AS(nngp_safe_ratio(-1.0 - 1e-9, 1.0), DomainError);
}

TEST_CASE("one-point posterior closed form") {
  GprModel m = GprModel::fit(Kernel::rbf(1.0, vec({1.0})), col({0.0}), vec({1.0}), 0.0);
  Vector mean, var;
  m.predict(col({1.0}), mean, var);
  CHECK(mean[0] == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(var[0] == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-10));
  // at the training point itself
  m.predict(col({0.0}), mean, var);
  CHECK(mean[0] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(var[0] < 1e-9);
  CHECK(var[0] > -1e-10);
}

TEST_CASE("noise-free gp interpolates the training targets") {
  Matrix x = col({0.0, 0.15, 0.3, 0.45, 0.6, 0.75, 0.9, 1.0});
  Vector y(8);
  for (int i = 0; i < 8; ++i) y[i] = std::sin(6.0 * x(i, 0));
  GprModel m = GprModel::fit(Kernel::rbf(1.0, vec({0.3})), x, y, 0.0);
  Vector mean, var;
  m.predict(x, mean, var);
  for (int i = 0; i < 8; ++i) CHECK(std::abs(mean[i] - y[i]) < 1e-6);
  // posterior variance stays above the roundoff floor everywhere
  Matrix s(101, 1);
  s.col(0) = linspace(0.0, 1.0, 101);
  m.predict(s, mean, var);
  for (int i = 0; i < 101; ++i) CHECK(var[i] >= -1e-10);
}

TEST_CASE("cholesky posterior matches dense-inversion oracle for small n") {
  Rng rng(33);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 2 + static_cast<int>(rng.uniform_int(4));  // n <= 5
    Matrix x(n, 1);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = rng.uniform(0.0, 1.0) + 1.2 * i;  // well separated
      y[i] = rng.uniform(-1.0, 1.0);
    }
    Kernel k = Kernel::rbf(1.5, vec({0.8}));
    const double noise = 1e-5;
    GprModel m = GprModel::fit(k, x, y, noise);

    Matrix ky = k.gram(x, x);
    ky.diagonal().array() += noise * noise;
    Matrix kinv = test_helpers::gauss_jordan_inverse(ky);

    Matrix s(7, 1);
    s.col(0) = linspace(-0.5, 1.2 * n, 7);
    Vector mean, var;
    m.predict(s, mean, var);
    Matrix ks = k.gram(s, x);
    for (int j = 0; j < 7; ++j) {
      const double mean_oracle = (ks.row(j) * kinv * y)(0);
      const double var_oracle =
          k.diag(s.row(j))(0) - (ks.row(j) * kinv * ks.row(j).transpose())(0);
      CHECK(std::abs(mean[j] - mean_oracle) < 1e-8);
      CHECK(std::abs(var[j] - var_oracle) < 1e-8);
    }
  }
}

TEST_CASE("log marginal likelihood closed form for one point") {
  const double sv = 2.0, noise = 0.1, yv = 0.7;
  GprModel m = GprModel::fit(Kernel::rbf(sv, vec({1.0})), col({0.3}), vec({yv}), noise);
  const double kyy = sv + noise * noise;
  const double want =
      -0.5 * yv * yv / kyy - 0.5 * std::log(kyy) - 0.5 * std::log(2.0 * std::numbers::pi);
  CHECK(m.log_marginal_likelihood() == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("chunk-parallel prediction equals the one-point reference") {
  Rng rng(34);
  Matrix x = col({0.0, 0.2, 0.4, 0.6, 0.8, 1.0});
  Vector y(6);
  for (int i = 0; i < 6; ++i) y[i] = rng.uniform(-1.0, 1.0);
  GprModel m = GprModel::fit(Kernel::nngp_erf(0.5, 1.5, 3), x, y, 1e-5);
  Matrix s(40, 1);
  s.col(0) = linspace(-0.2, 1.2, 40);
  Vector mean, var, mean_ref, var_ref;
  m.predict(s, mean, var);
  m.predict_reference(s, mean_ref, var_ref);
  // The weight vector is large here (near-noise-free fit), so summation-order
  // differences are amplified; bound them relative to that magnitude.
  const double scale = std::max(1.0, mean_ref.cwiseAbs().maxCoeff()) * 1e4;
  CHECK((mean - mean_ref).cwiseAbs().maxCoeff() < 1e-12 * scale);
  CHECK((var - var_ref).cwiseAbs().maxCoeff() < 1e-12 * scale);
}

TEST_CASE("generic lmc weights reproduce the autoregressive blocks") {
  Kernel k1 = Kernel::rbf(1.2, vec({0.4}));
  Kernel k2 = Kernel::rbf(0.5, vec({0.2}));
  const double rho = 1.7;
  LmcWeights w;
  w << 1.0, 0.0, rho, 1.0;
  Matrix xl = col({0.0, 0.3, 0.9});
  Matrix xh = col({0.1, 0.8});

  Matrix ll = lmc_block(w, 0, 0, k1, k2, xl, xl);
  CHECK((ll - k1.gram(xl, xl)).cwiseAbs().maxCoeff() == 0.0);
  Matrix lh = lmc_block(w, 0, 1, k1, k2, xl, xh);
  CHECK((lh - rho * k1.gram(xl, xh)).cwiseAbs().maxCoeff() < 1e-15);
  Matrix hh = lmc_block(w, 1, 1, k1, k2, xh, xh);
  Matrix want = rho * rho * k1.gram(xh, xh) + k2.gram(xh, xh);
  CHECK((hh - want).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("zero regression weight reduces co-kriging to single-fidelity gp") {
  Rng rng(35);
  Matrix xl(10, 1), xh(5, 1);
  Vector yl(10), yh(5);
  for (int i = 0; i < 10; ++i) {
    xl(i, 0) = i / 9.0;
    yl[i] = rng.uniform(-1.0, 1.0);
  }
  for (int i = 0; i < 5; ++i) {
    xh(i, 0) = 0.1 + i / 5.0;
    yh[i] = rng.uniform(-1.0, 1.0);
  }
  Kernel k1 = Kernel::rbf(1.0, vec({0.3}));
  Kernel k2 = Kernel::rbf(0.8, vec({0.25}));
  CoKrigingModel ck = CoKrigingModel::fit(k1, k2, 0.0, xl, yl, xh, yh);
  GprModel sf = GprModel::fit(k2, xh, yh, 1e-5);

  Matrix s(33, 1);
  s.col(0) = linspace(0.0, 1.0, 33);
  Vector cm, cv, gm, gv;
  ck.predict_hf(s, cm, cv);
  sf.predict(s, gm, gv);
  CHECK((cm - gm).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((cv - gv).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("fitted co-kriging recovers an exact scale ratio between fidelities") {
  Matrix xl(12, 1);
  xl.col(0) = linspace(0.0, 1.0, 12);
  Vector yl(12);
  for (int i = 0; i < 12; ++i) yl[i] = std::sin(2.0 * std::numbers::pi * xl(i, 0));
  // high fidelity observed at a subset of the low-fidelity sites, exactly 2x
  Matrix xh(4, 1);
  Vector yh(4);
  int hs[4] = {1, 4, 7, 10};
  for (int i = 0; i < 4; ++i) {
    xh(i, 0) = xl(hs[i], 0);
    yh[i] = 2.0 * yl[hs[i]];
  }
  MleOptions opt;
  opt.seed = 3;
  CoKrigingModel m = fit_cokriging(Kernel::rbf(1.0, vec({0.3})), Kernel::rbf(1.0, vec({0.3})),
                                   xl, yl, xh, yh, opt);
  CHECK(m.rho() == doctest::Approx(2.0).epsilon(0.05));

  // held-out low-fidelity sites: the learned relation transfers
  double mse = 0.0;
  int count = 0;
  Matrix s(1, 1);
  for (int i = 0; i < 12; ++i) {
    if (i == hs[0] || i == hs[1] || i == hs[2] || i == hs[3]) continue;
    s(0, 0) = xl(i, 0);
    const double pred = m.predict_hf_mean(s)(0);
    const double truth = 2.0 * yl[i];
    mse += (pred - truth) * (pred - truth);
    ++count;
  }
  mse /= count;
  const double data_var = (yh.array() - yh.mean()).square().mean();
  CHECK(mse / data_var < 1e-4);
}

TEST_CASE("likelihood fit improves on the starting hyperparameters") {
  Rng rng(36);
  Matrix x(15, 1);
  x.col(0) = linspace(0.0, 1.0, 15);
  Vector y(15);
  for (int i = 0; i < 15; ++i)
    y[i] = std::sin(5.0 * x(i, 0)) + 0.7 * x(i, 0) + 0.001 * rng.normal();
  Kernel init = Kernel::rbf(1.0, vec({1.0}));
  const double lml0 = GprModel::fit(init, x, y, 1e-5).log_marginal_likelihood();
  MleOptions opt;
  opt.seed = 11;
  GprModel fitted = fit_gpr(init, x, y, opt);
  CHECK(fitted.log_marginal_likelihood() > lml0);
  // fixed observation noise never enters the search
  CHECK(fitted.noise_std() == 1e-5);
  // bounds respected
  for (double p : fitted.kernel().free_params()) {
    CHECK(p >= 1e-4);
    CHECK(p <= 1e4);
  }
}

TEST_CASE("hyperparameter search is deterministic in the seed") {
  Matrix x(10, 1);
  x.col(0) = linspace(0.0, 1.0, 10);
  Vector y(10);
  for (int i = 0; i < 10; ++i) y[i] = std::cos(4.0 * x(i, 0));
  MleOptions opt;
  opt.seed = 21;
  GprModel a = fit_gpr(Kernel::rbf(1.0, vec({0.5})), x, y, opt);
  GprModel b = fit_gpr(Kernel::rbf(1.0, vec({0.5})), x, y, opt);
  Matrix s(17, 1);
  s.col(0) = linspace(0.0, 1.0, 17);
  Vector ma = a.predict_mean(s), mb = b.predict_mean(s);
  CHECK((ma - mb).cwiseAbs().maxCoeff() == 0.0);
  const auto pa = a.kernel().free_params(), pb = b.kernel().free_params();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i] == pb[i]);
}

TEST_CASE("nelder-mead minimizes a smooth bowl") {
  auto f = [](const Vector& v) {
    const double a = v[0] - 1.5, b = v[1] + 0.5;
    return a * a + 3.0 * b * b + 0.2;
  };
  Vector x0 = Vector::Zero(2);
  NelderMeadResult r = nelder_mead(f, x0, 0.5, 300);
  CHECK(r.value == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(r.x[0] == doctest::Approx(1.5).epsilon(1e-3));
  CHECK(r.x[1] == doctest::Approx(-0.5).epsilon(1e-3));
  // rejection values are tolerated
  auto g = [](const Vector& v) {
    if (v[0] < 0.0) return std::numeric_limits<double>::infinity();
    return (v[0] - 2.0) * (v[0] - 2.0);
  };
  Vector z0 = Vector::Ones(1);
  NelderMeadResult rg = nelder_mead(g, z0, 0.5, 200);
  CHECK(rg.x[0] == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("gp shape errors") {
  CHECK_THROWS_AS(GprModel::fit(Kernel::rbf(1.0, vec({1.0})), Matrix(0, 1), Vector(0), 0.0),
                  EmptyData);
  CHECK_THROWS_AS(GprModel::fit(Kernel::rbf(1.0, vec({1.0})), Matrix::Zero(3, 1), Vector::Zero(2), 0.0),
                  DimensionMismatch);
  CHECK_THROWS_AS(Kernel::rbf(-1.0, vec({1.0})), ConfigError);
  CHECK_THROWS_AS(Kernel::rbf(1.0, vec({0.0})), ConfigError);
  CHECK_THROWS_AS(Kernel::nngp_erf(1.0, 1.0, -1), ConfigError);
  GprModel m = GprModel::fit(Kernel::rbf(1.0, vec({1.0})), col({0.0}), vec({1.0}), 0.0);
  Vector mean, var;
  CHECK_THROWS_AS(m.predict(Matrix::Zero(2, 3), mean, var), DimensionMismatch);
}
