// Timing comparison of the parallel kernels against their serial reference
// implementations: covariance assembly, network loss/gradient, GP posterior.
// Thread count follows OMP_NUM_THREADS / MUFIDE_THREADS.

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <functional>

#include "mufide/gp.hpp"
#include "mufide/nn.hpp"
#include "mufide/parallel.hpp"
#include "mufide/rng.hpp"

namespace {

using mufide::Matrix;
using mufide::Rng;
using mufide::Vector;

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
  return m;
}

// Median-free minimal protocol: warm once, then best of `reps` runs.
double time_best(int reps, const std::function<void()>& fn) {
  fn();
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const double t0 = omp_get_wtime();
    fn();
    const double t1 = omp_get_wtime();
    best = std::min(best, t1 - t0);
  }
  return best;
}

void report(const char* name, double serial, double parallel, double max_diff) {
  std::printf("%-22s serial %8.2f ms   parallel %8.2f ms   speedup %5.2fx   max|diff| %.3g\n",
              name, serial * 1e3, parallel * 1e3, serial / parallel, max_diff);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", mufide::par::max_threads());
  Rng rng(20240229);

  {
    const Matrix xa = random_matrix(1200, 10, rng);
    const Matrix xb = random_matrix(900, 10, rng);
    const auto k = mufide::gp::Kernel::rbf(1.3, Vector::Constant(10, 0.8));
    Matrix out;
    const double ts = time_best(3, [&] { out = k.gram_reference(xa, xb); });
    const Matrix ref = out;
    const double tp = time_best(3, [&] { out = k.gram(xa, xb); });
    report("rbf gram", ts, tp, (out - ref).cwiseAbs().maxCoeff());
  }
  {
    const Matrix xa = random_matrix(1200, 10, rng);
    const Matrix xb = random_matrix(900, 10, rng);
    const auto k = mufide::gp::Kernel::nngp_erf(0.5, 1.5, 3);
    Matrix out;
    const double ts = time_best(3, [&] { out = k.gram_reference(xa, xb); });
    const Matrix ref = out;
    const double tp = time_best(3, [&] { out = k.gram(xa, xb); });
    report("erf-network gram", ts, tp, (out - ref).cwiseAbs().maxCoeff());
  }
  {
    mufide::nn::NetworkSpec spec;
    spec.input_dim = 8;
    spec.hidden = {{64, mufide::nn::Activation::kTanh},
                   {64, mufide::nn::Activation::kTanh},
                   {64, mufide::nn::Activation::kTanh}};
    spec.output_dim = 1;
    const mufide::nn::Network net = mufide::nn::init_network(spec, rng);
    const Matrix x = random_matrix(4096, 8, rng);
    const Matrix y = random_matrix(4096, 1, rng);
    mufide::nn::LossGrad lg;
    const double ts =
        time_best(5, [&] { lg = mufide::nn::loss_and_grad_reference(net, x, y, 1e-4); });
    const double ref_loss = lg.loss;
    const double tp = time_best(5, [&] { lg = mufide::nn::loss_and_grad(net, x, y, 1e-4); });
    report("network loss+grad", ts, tp, std::abs(lg.loss - ref_loss));
  }
  {
    const Matrix x = random_matrix(700, 6, rng);
    Vector y(700);
    for (int i = 0; i < 700; ++i) y[i] = std::sin(x.row(i).sum());
    const auto model = mufide::gp::GprModel::fit(
        mufide::gp::Kernel::rbf(1.0, Vector::Constant(6, 1.0)), x, y, 1e-4);
    const Matrix s = random_matrix(2000, 6, rng);
    Vector mean, var;
    const double ts = time_best(3, [&] { model.predict_reference(s, mean, var); });
    const Vector ref_mean = mean;
    const double tp = time_best(3, [&] { model.predict(s, mean, var); });
    report("gp posterior", ts, tp, (mean - ref_mean).cwiseAbs().maxCoeff());
  }
  return 0;
}
