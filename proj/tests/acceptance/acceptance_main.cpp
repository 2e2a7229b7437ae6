// Release acceptance checks. Every gate the toolkit must clear is pinned
// here with its threshold; each criterion prints one PASS/FAIL verdict line
// and the process exits nonzero if any requested criterion fails.
//
// Network training is stochastic, so the benchmark criteria run five fixed
// seeds and require at least four of them to clear every bar. Exact-math
// criteria (gradients, posteriors, endpoints, oracles) run once.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mufide/bench.hpp"
#include "mufide/cli.hpp"
#include "mufide/csv.hpp"
#include "mufide/errors.hpp"
#include "mufide/gp.hpp"
#include "mufide/hpo.hpp"
#include "mufide/mfnn.hpp"
#include "mufide/nn.hpp"
#include "mufide/rng.hpp"

#include "../helpers.hpp"

namespace {

using namespace mufide;

constexpr int kSeeds[] = {1, 2, 3, 4, 5};
constexpr int kSeedCount = 5;
constexpr int kSeedsNeeded = 4;

double minutes(double seconds) { return seconds / 60.0; }

const bench::ReportRow* find_row(const bench::ExperimentResult& res, bench::ModelKind kind) {
  for (const auto& row : res.rows)
    if (row.model == kind) return &row;
  return nullptr;
}

// One threshold on one model's metrics. upper flips the comparison for the
// structural-failure bars (models that are supposed to do badly).
struct Bar {
  bench::ModelKind model;
  const char* metric;  // "mse" or "r2"
  double limit;
  bool upper = false;
};

bool bar_met(const bench::ReportRow* row, const Bar& bar) {
  if (row == nullptr || !row->ok) return false;
  double value;
  if (std::strcmp(bar.metric, "mse") == 0) {
    value = row->test.mse;
  } else {
    if (!row->test.r2) return false;
    value = *row->test.r2;
  }
  return bar.upper ? value <= bar.limit : value >= bar.limit;
}

void print_row(const bench::ReportRow* row) {
  if (row == nullptr) {
    std::printf("    (model missing from report)\n");
    return;
  }
  if (!row->ok) {
    std::printf("    %-16s FAILED: %s\n", bench::display_name(row->model).c_str(),
                row->error.c_str());
    return;
  }
  std::printf("    %-16s mse=%-12.4g r2=%-10.6f %6.1f min\n",
              bench::display_name(row->model).c_str(), row->test.mse,
              row->test.r2.value_or(std::numeric_limits<double>::quiet_NaN()),
              minutes(row->test.elapsed_seconds));
}

// Shared runner for the benchmark criteria: five seeds, all bars per seed.
bool run_benchmark_criterion(int number, bench::CaseId id,
                             const std::vector<bench::ModelKind>& models,
                             const std::vector<Bar>& bars, int budget, int n_test,
                             int case4_n_hf = 0, int case4_n_lf = 0,
                             double max_seed_seconds = 0.0) {
  int good = 0;
  for (int seed : kSeeds) {
    bench::ExperimentSettings settings;
    settings.seed = static_cast<std::uint64_t>(seed);
    settings.budget = budget;
    settings.n_test = n_test;
    settings.case4_n_hf = case4_n_hf;
    settings.case4_n_lf = case4_n_lf;
    const auto result = bench::run_experiment(id, models, settings);

    double seed_seconds = 0.0;
    for (const auto& row : result.rows) seed_seconds += row.test.elapsed_seconds;
    bool seed_ok = true;
    for (const Bar& bar : bars) seed_ok = seed_ok && bar_met(find_row(result, bar.model), bar);
    if (max_seed_seconds > 0.0 && seed_seconds > max_seed_seconds) seed_ok = false;

    std::printf("  seed %d: %s (total %.1f min)\n", seed, seed_ok ? "ok" : "BAR MISSED",
                minutes(seed_seconds));
    for (const auto& row : result.rows) print_row(&row);
    std::fflush(stdout);
    if (seed_ok) ++good;
  }
  const bool pass = good >= kSeedsNeeded;
  std::printf("criterion %d: %s (%d/%d seeds clear every bar, need >= %d)\n", number,
              pass ? "PASS" : "FAIL", good, kSeedCount, kSeedsNeeded);
  return pass;
}

// Criterion 1: case 1 at full search budget. The co-kriging and three-step
// rows carry both error bars; the all-in-one rows carry an R^2 floor.
// Per-model runtime is printed for the 10-minutes-per-model expectation but
// is not gated: it depends on host hardware, not on the code under test.
bool criterion_1() {
  std::printf("criterion 1: case 1, budget 60, seeds 1..5\n");
  std::printf("  bars: cokriging mse<=3e-3 r2>=0.995, three-step mse<=1e-2 r2>=0.995,\n");
  std::printf("        intermediate r2>=0.98, gpmimic r2>=0.98\n");
  return run_benchmark_criterion(
      1, bench::CaseId::kLinearCorrelation,
      {bench::ModelKind::kCokriging, bench::ModelKind::kIntermediate,
       bench::ModelKind::kGpmimic, bench::ModelKind::kThreeStep},
      {{bench::ModelKind::kCokriging, "mse", 3e-3, true},
       {bench::ModelKind::kCokriging, "r2", 0.995},
       {bench::ModelKind::kThreeStep, "mse", 1e-2, true},
       {bench::ModelKind::kThreeStep, "r2", 0.995},
       {bench::ModelKind::kIntermediate, "r2", 0.98},
       {bench::ModelKind::kGpmimic, "r2", 0.98}},
      /*budget=*/60, /*n_test=*/0);
}

bool criterion_2() {
  std::printf("criterion 2: case 2, budget 60, seeds 1..5\n");
  std::printf("  bars: two-step r2>=0.99, three-step r2>=0.99, cokriging r2>=0.97\n");
  return run_benchmark_criterion(
      2, bench::CaseId::kDiscontinuous,
      {bench::ModelKind::kCokriging, bench::ModelKind::kTwoStep, bench::ModelKind::kThreeStep},
      {{bench::ModelKind::kTwoStep, "r2", 0.99},
       {bench::ModelKind::kThreeStep, "r2", 0.99},
       {bench::ModelKind::kCokriging, "r2", 0.97}},
      /*budget=*/60, /*n_test=*/0);
}

// Criterion 3 includes two inverted bars: the architectures that assume a
// linear cross-fidelity relationship must do badly on this case.
bool criterion_3() {
  std::printf("criterion 3: case 3, budget 60, seeds 1..5\n");
  std::printf("  bars: two-step r2>=0.98, three-step r2>=0.98, gpmimic r2<=0.5,\n");
  std::printf("        cokriging r2<=0.8\n");
  return run_benchmark_criterion(
      3, bench::CaseId::kNonlinearCorrelation,
      {bench::ModelKind::kCokriging, bench::ModelKind::kGpmimic, bench::ModelKind::kTwoStep,
       bench::ModelKind::kThreeStep},
      {{bench::ModelKind::kTwoStep, "r2", 0.98},
       {bench::ModelKind::kThreeStep, "r2", 0.98},
       {bench::ModelKind::kGpmimic, "r2", 0.5, true},
       {bench::ModelKind::kCokriging, "r2", 0.8, true}},
      /*budget=*/60, /*n_test=*/0);
}

// Criterion 4: the 20-D case at reduced sample counts. The three-step model
// must both fit well and beat the single-fidelity baseline by a margin, and
// the whole run must stay under 30 minutes per seed.
bool criterion_4() {
  std::printf("criterion 4: case 4 at 500 HF / 3000 LF / 10000 test, budget 8, seeds 1..5\n");
  std::printf("  bars: three-step r2>=0.95, lead over single-fidelity >=0.05,\n");
  std::printf("        runtime <= 30 min per seed\n");
  int good = 0;
  for (int seed : kSeeds) {
    bench::ExperimentSettings settings;
    settings.seed = static_cast<std::uint64_t>(seed);
    settings.budget = 8;
    settings.n_test = 10000;
    settings.case4_n_hf = 500;
    settings.case4_n_lf = 3000;
    const auto result =
        bench::run_experiment(bench::CaseId::kHighDim20,
                              {bench::ModelKind::kThreeStep, bench::ModelKind::kSingleFidelity},
                              settings);
    const auto* three = find_row(result, bench::ModelKind::kThreeStep);
    const auto* single = find_row(result, bench::ModelKind::kSingleFidelity);
    double seconds = 0.0;
    for (const auto& row : result.rows) seconds += row.test.elapsed_seconds;

    bool seed_ok = three != nullptr && three->ok && three->test.r2 &&
                   single != nullptr && single->ok && single->test.r2;
    double lead = 0.0;
    if (seed_ok) {
      lead = *three->test.r2 - *single->test.r2;
      seed_ok = *three->test.r2 >= 0.95 && lead >= 0.05 && seconds <= 1800.0;
    }
    std::printf("  seed %d: %s (lead %.4f, total %.1f min)\n", seed,
                seed_ok ? "ok" : "BAR MISSED", lead, minutes(seconds));
    for (const auto& row : result.rows) print_row(&row);
    std::fflush(stdout);
    if (seed_ok) ++good;
  }
  const bool pass = good >= kSeedsNeeded;
  std::printf("criterion 4: %s (%d/%d seeds clear every bar, need >= %d)\n",
              pass ? "PASS" : "FAIL", good, kSeedCount, kSeedsNeeded);
  return pass;
}

// Criterion 5: backpropagation against central finite differences on a
// 3x32 tanh net, 1000 randomly chosen parameters. Relative error below 1e-6
// where the analytic gradient has magnitude, absolute 1e-8 where it is
// small: the difference quotient carries a roundoff floor of eps * |loss| /
// h (about 4e-10 here), so below 1e-3 the relative form measures that floor
// rather than the gradient.
bool criterion_5() {
  std::printf("criterion 5: gradient check, 1000 parameters, h=1e-6\n");
  nn::NetworkSpec spec;
  spec.input_dim = 4;
  spec.hidden = {{32, nn::Activation::kTanh},
                 {32, nn::Activation::kTanh},
                 {32, nn::Activation::kTanh}};
  spec.output_dim = 1;
  Rng init_rng(555);
  nn::Network net = nn::init_network(spec, init_rng);

  Rng data_rng(556);
  const int n = 64;
  Matrix x(n, 4);
  Matrix y(n, 1);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < 4; ++c) x(r, c) = data_rng.uniform(-1.0, 1.0);
    y(r, 0) = data_rng.uniform(-2.0, 2.0);
  }
  const double l2 = 1e-4;
  const nn::LossGrad lg = nn::loss_and_grad(net, x, y, l2);

  // Flat coordinate space over all weight and bias entries.
  std::vector<std::ptrdiff_t> tensor_sizes;
  std::ptrdiff_t total = 0;
  for (const auto& layer : net.layers()) {
    tensor_sizes.push_back(layer.w.size());
    tensor_sizes.push_back(layer.b.size());
    total += layer.w.size() + layer.b.size();
  }
  auto coord_value = [&](nn::Network& target, std::ptrdiff_t flat) -> double& {
    for (std::size_t l = 0; l < target.layers().size(); ++l) {
      auto& layer = target.layers()[l];
      if (flat < layer.w.size()) return layer.w.data()[flat];
      flat -= layer.w.size();
      if (flat < layer.b.size()) return layer.b.data()[flat];
      flat -= layer.b.size();
    }
    throw std::out_of_range("coordinate index");
  };
  auto grad_value = [&](std::ptrdiff_t flat) -> double {
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      if (flat < lg.grad.dw[l].size()) return lg.grad.dw[l].data()[flat];
      flat -= lg.grad.dw[l].size();
      if (flat < lg.grad.db[l].size()) return lg.grad.db[l].data()[flat];
      flat -= lg.grad.db[l].size();
    }
    throw std::out_of_range("gradient index");
  };

  const double h = 1e-6;
  Rng pick(557);
  int failures = 0;
  double worst_rel = 0.0, worst_abs = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto flat = static_cast<std::ptrdiff_t>(pick.uniform_int(static_cast<std::uint64_t>(total)));
    nn::Network plus = net;
    coord_value(plus, flat) += h;
    nn::Network minus = net;
    coord_value(minus, flat) -= h;
    const double fd = (nn::loss_and_grad(plus, x, y, l2).loss -
                       nn::loss_and_grad(minus, x, y, l2).loss) /
                      (2.0 * h);
    const double analytic = grad_value(flat);
    if (std::abs(analytic) < 1e-3) {
      const double abs_err = std::abs(fd - analytic);
      worst_abs = std::max(worst_abs, abs_err);
      if (abs_err >= 1e-8) ++failures;
    } else {
      const double rel = std::abs(fd - analytic) / std::abs(analytic);
      worst_rel = std::max(worst_rel, rel);
      if (rel >= 1e-6) ++failures;
    }
  }
  const bool pass = failures == 0;
  std::printf("  worst relative error %.3g (bar 1e-6), worst small-entry error %.3g (bar 1e-8)\n",
              worst_rel, worst_abs);
  std::printf("criterion 5: %s (%d of 1000 coordinates out of tolerance)\n",
              pass ? "PASS" : "FAIL", failures);
  return pass;
}

// Criterion 6: exact-GP identities. Interpolation with zero observation
// noise, variance bounded below by roundoff only, the Cholesky solve against
// a dense-inverse oracle on tiny systems, and rho=0 co-kriging collapsing to
// plain regression on the high-fidelity points.
bool criterion_6() {
  std::printf("criterion 6: GP posterior identities\n");
  bool pass = true;

  {
    const int n = 9;
    Matrix x(n, 1);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = static_cast<double>(i) / (n - 1);
      y[i] = std::sin(3.0 * x(i, 0)) + 0.2 * x(i, 0) * x(i, 0);
    }
    Vector ls(1);
    ls << 0.3;
    const auto model = gp::GprModel::fit(gp::Kernel::rbf(1.0, ls), x, y, 0.0);
    const double err = (model.predict_mean(x) - y).cwiseAbs().maxCoeff();
    std::printf("  interpolation at zero noise: max |f - y| = %.3g (bar 1e-6)\n", err);
    pass = pass && err <= 1e-6;

    Rng rng(661);
    Matrix s(200, 1);
    for (int i = 0; i < 200; ++i) s(i, 0) = rng.uniform(-0.2, 1.2);
    Vector mean, var;
    model.predict(s, mean, var);
    const double min_var = var.minCoeff();
    std::printf("  posterior variance floor: min = %.3g (bar -1e-10)\n", min_var);
    pass = pass && min_var >= -1e-10;
  }

  {
    Rng rng(662);
    Vector ls(2);
    ls << 0.7, 1.1;
    const gp::Kernel k = gp::Kernel::rbf(1.3, ls);
    const double noise = 1e-3;
    double worst = 0.0;
    for (int n = 2; n <= 5; ++n) {
      Matrix x(n, 2);
      Vector y(n);
      for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.uniform(0.0, 1.0);
        x(i, 1) = rng.uniform(0.0, 1.0);
        y[i] = rng.uniform(-1.0, 1.0);
      }
      const auto model = gp::GprModel::fit(k, x, y, noise);

      Matrix cov = k.gram(x, x);
      cov.diagonal().array() += noise * noise;
      const Matrix inv = test_helpers::gauss_jordan_inverse(cov);

      Matrix s(20, 2);
      for (int i = 0; i < 20; ++i) {
        s(i, 0) = rng.uniform(0.0, 1.0);
        s(i, 1) = rng.uniform(0.0, 1.0);
      }
      Vector mean, var;
      model.predict(s, mean, var);
      const Matrix ks = k.gram(s, x);
      const Vector oracle_mean = ks * (inv * y);
      const Vector oracle_var =
          k.diag(s) - (ks * inv).cwiseProduct(ks).rowwise().sum();
      worst = std::max(worst, (mean - oracle_mean).cwiseAbs().maxCoeff());
      worst = std::max(worst, (var - oracle_var).cwiseAbs().maxCoeff());
    }
    std::printf("  Cholesky vs dense-inverse oracle (n<=5): max diff = %.3g (bar 1e-8)\n",
                worst);
    pass = pass && worst <= 1e-8;
  }

  {
    Rng rng(663);
    Matrix x_lf(12, 1), x_hf(6, 1);
    Vector y_lf(12), y_hf(6);
    for (int i = 0; i < 12; ++i) {
      x_lf(i, 0) = rng.uniform(0.0, 1.0);
      y_lf[i] = rng.uniform(-1.0, 1.0);
    }
    for (int i = 0; i < 6; ++i) {
      x_hf(i, 0) = rng.uniform(0.0, 1.0);
      y_hf[i] = rng.uniform(-1.0, 1.0);
    }
    Vector ls1(1), ls2(1);
    ls1 << 0.4;
    ls2 << 0.8;
    // Noise floor keeps the high-fidelity system well conditioned: the two
    // factorizations order their lane sums differently, and that roundoff
    // is amplified by the condition number, not by any structural mismatch.
    const double noise = 1e-3;
    const auto joint = gp::CoKrigingModel::fit(gp::Kernel::rbf(1.1, ls1),
                                               gp::Kernel::rbf(0.9, ls2), 0.0, x_lf, y_lf,
                                               x_hf, y_hf, noise, noise);
    const auto direct = gp::GprModel::fit(gp::Kernel::rbf(0.9, ls2), x_hf, y_hf, noise);
    Matrix s(50, 1);
    for (int i = 0; i < 50; ++i) s(i, 0) = rng.uniform(0.0, 1.0);
    Vector jm, jv, dm, dv;
    joint.predict_hf(s, jm, jv);
    direct.predict(s, dm, dv);
    const double diff = std::max((jm - dm).cwiseAbs().maxCoeff(),
                                 (jv - dv).cwiseAbs().maxCoeff());
    std::printf("  rho=0 co-kriging vs plain regression: max diff = %.3g (bar 1e-8)\n", diff);
    pass = pass && diff <= 1e-8;
  }

  std::printf("criterion 6: %s\n", pass ? "PASS" : "FAIL");
  return pass;
}

// Criterion 7: the fidelity-mix endpoints. At alpha=1 the composite loss
// carries a zero-weighted low-fidelity term, so the training trajectory must
// match a run with that branch switched off entirely; alpha=0 mirrors it.
bool criterion_7() {
  std::printf("criterion 7: fidelity-mix endpoint trajectories\n");
  Rng data_rng(99);
  Matrix x_hf(6, 1), x_lf(14, 1);
  Vector y_hf(6), y_lf(14);
  for (int i = 0; i < 6; ++i) {
    x_hf(i, 0) = data_rng.uniform(-1.0, 1.0);
    y_hf[i] = data_rng.uniform(-1.0, 1.0);
  }
  for (int i = 0; i < 14; ++i) {
    x_lf(i, 0) = data_rng.uniform(-1.0, 1.0);
    y_lf[i] = data_rng.uniform(-1.0, 1.0);
  }

  bool pass = true;
  for (const auto variant : {mfnn::Variant::kIntermediate, mfnn::Variant::kGpmimic}) {
    for (const double alpha : {1.0, 0.0}) {
      mfnn::AllInOneConfig cfg;
      cfg.alpha = alpha;
      cfg.depth = 1;
      cfg.width = 8;
      cfg.train.max_epochs = 300;
      cfg.train.patience = 1000;
      cfg.train.learning_rate = 1e-2;
      cfg.train.l2_penalty = 1e-3;
      Rng init_rng(31);
      const auto net = mfnn::make_all_in_one_net(variant, 1, cfg, init_rng);
      const auto both =
          mfnn::train_all_in_one(net, x_hf, y_hf, x_lf, y_lf, cfg, true, true);
      const auto only = alpha == 1.0
                            ? mfnn::train_all_in_one(net, x_hf, y_hf, x_lf, y_lf, cfg,
                                                     true, false)
                            : mfnn::train_all_in_one(net, x_hf, y_hf, x_lf, y_lf, cfg,
                                                     false, true);
      double worst = std::abs(both.best_loss - only.best_loss);
      const bool lengths = both.history.size() == only.history.size();
      if (lengths)
        for (std::size_t e = 0; e < both.history.size(); ++e)
          worst = std::max(worst, std::abs(both.history[e] - only.history[e]));
      std::printf("  %s alpha=%.0f: %zu epochs, max per-epoch diff %.3g (bar 1e-12)\n",
                  mfnn::to_string(variant).c_str(), alpha, both.history.size(), worst);
      pass = pass && lengths && worst <= 1e-12;
    }
  }
  std::printf("criterion 7: %s\n", pass ? "PASS" : "FAIL");
  return pass;
}

// Criterion 8: search machinery. Fold partitions, suggestions inside the
// box, the quadratic head-to-head against uniform random search (sign test:
// 15 wins in 20 is the one-sided 5% bar), and seed determinism.
bool criterion_8() {
  std::printf("criterion 8: cross-validation folds and search behavior\n");
  bool pass = true;

  {
    bool folds_ok = true;
    for (const int n : {2, 3, 5, 7, 10, 11, 16, 23, 40, 57}) {
      const hpo::CvPlan plan = hpo::default_cv_plan(n);
      const auto folds = hpo::make_folds(n, plan);
      std::vector<int> seen(n, 0);
      int min_size = n, max_size = 0;
      for (const auto& fold : folds) {
        min_size = std::min(min_size, static_cast<int>(fold.val_idx.size()));
        max_size = std::max(max_size, static_cast<int>(fold.val_idx.size()));
        for (const int idx : fold.val_idx) {
          if (idx < 0 || idx >= n) folds_ok = false;
          else ++seen[idx];
        }
      }
      for (const int count : seen) folds_ok = folds_ok && count == 1;
      folds_ok = folds_ok && (max_size - min_size) <= 1;
      if (n <= 10) folds_ok = folds_ok && static_cast<int>(folds.size()) == n;
    }
    std::printf("  fold partitions (spread <= 1, every index once): %s\n",
                folds_ok ? "ok" : "violated");
    pass = pass && folds_ok;
  }

  hpo::SearchSpace space;
  space.dims.push_back(hpo::Dimension::log_uniform("rate", 1e-5, 1e-1));
  space.dims.push_back(hpo::Dimension::uniform("mix", 0.1, 0.9));
  space.dims.push_back(hpo::Dimension::uniform_int("width", 2, 7));
  space.dims.push_back(hpo::Dimension::categorical("opt", {"a", "b", "c"}));
  const hpo::ObjectiveFn box_objective = [](const hpo::Config& cfg, std::uint64_t) {
    const double rate = hpo::config_double(cfg, "rate");
    const double mix = hpo::config_double(cfg, "mix");
    const auto width = hpo::config_int(cfg, "width");
    const std::string& opt = hpo::config_string(cfg, "opt");
    return 0.1 * (std::log10(rate) + 3.0) * (std::log10(rate) + 3.0) +
           (mix - 0.37) * (mix - 0.37) + 0.01 * std::abs(static_cast<double>(width) - 5.0) +
           (opt == "b" ? 0.0 : 0.05);
  };

  {
    const auto result = hpo::optimize(space, box_objective, 60, hpo::TpeOptions{}, 77);
    bool in_domain = static_cast<int>(result.trials.size()) == 60;
    for (const auto& trial : result.trials) {
      const double rate = hpo::config_double(trial.config, "rate");
      const double mix = hpo::config_double(trial.config, "mix");
      const auto width = hpo::config_int(trial.config, "width");
      const std::string& opt = hpo::config_string(trial.config, "opt");
      in_domain = in_domain && rate >= 1e-5 && rate <= 1e-1;
      in_domain = in_domain && mix >= 0.1 && mix <= 0.9;
      in_domain = in_domain && width >= 2 && width <= 7;
      in_domain = in_domain && (opt == "a" || opt == "b" || opt == "c");
    }
    std::printf("  60 suggestions inside the box: %s\n", in_domain ? "ok" : "violated");
    pass = pass && in_domain;
  }

  {
    hpo::SearchSpace quad;
    quad.dims.push_back(hpo::Dimension::uniform("x", 0.0, 1.0));
    const hpo::ObjectiveFn quad_objective = [](const hpo::Config& cfg, std::uint64_t) {
      const double x = hpo::config_double(cfg, "x");
      return (x - 0.3) * (x - 0.3);
    };
    int wins = 0;
    for (int rep = 0; rep < 20; ++rep) {
      const auto tpe =
          hpo::optimize(quad, quad_objective, 50, hpo::TpeOptions{}, 1000 + rep);
      Rng random_rng(2000 + rep);
      double random_best = std::numeric_limits<double>::infinity();
      for (int t = 0; t < 50; ++t) {
        const auto cfg = hpo::sample_uniform(quad, random_rng);
        random_best = std::min(random_best, quad_objective(cfg, 0));
      }
      if (tpe.best_objective < random_best) ++wins;
    }
    std::printf("  quadratic head-to-head: %d/20 wins (bar 15)\n", wins);
    pass = pass && wins >= 15;
  }

  {
    const auto a = hpo::optimize(space, box_objective, 30, hpo::TpeOptions{}, 42);
    const auto b = hpo::optimize(space, box_objective, 30, hpo::TpeOptions{}, 42);
    const auto c = hpo::optimize(space, box_objective, 30, hpo::TpeOptions{}, 43);
    bool same = a.trials.size() == b.trials.size() && a.best_config == b.best_config;
    if (same)
      for (std::size_t i = 0; i < a.trials.size(); ++i)
        same = same && a.trials[i].config == b.trials[i].config &&
               a.trials[i].objective == b.trials[i].objective;
    bool different = a.trials.size() != c.trials.size();
    for (std::size_t i = 0; !different && i < a.trials.size(); ++i)
      different = a.trials[i].config != c.trials[i].config;
    std::printf("  seed determinism: repeat %s, new seed %s\n",
                same ? "identical" : "DIVERGED", different ? "differs" : "IDENTICAL");
    pass = pass && same && different;
  }

  std::printf("criterion 8: %s\n", pass ? "PASS" : "FAIL");
  return pass;
}

// Extended-precision recomputation of the four analytic cases, written
// directly from their definitions and sharing no code with the library.
namespace oracle {

long double c1_hf(long double x) {
  const long double s = 6.0L * x - 2.0L;
  return s * s * std::sin(12.0L * x - 4.0L);
}
long double c1_lf(long double x) { return 0.5L * c1_hf(x) + 10.0L * (x - 0.5L) + 5.0L; }

long double c2_lf(long double x) {
  const long double s = 6.0L * x - 2.0L;
  long double v = 0.5L * s * s * std::sin(12.0L * x - 4.0L) + 10.0L * (x - 0.5L) - 5.0L;
  if (x > 0.5L) v += 3.0L;
  return v;
}
long double c2_hf(long double x) {
  long double v = 2.0L * c2_lf(x) - 20.0L * (x - 1.0L);
  if (x > 0.5L) v += 4.0L;
  return v;
}

long double c3_lf(long double x) {
  return std::sin(8.0L * std::numbers::pi_v<long double> * x);
}
long double c3_hf(long double x) {
  const long double lf = c3_lf(x);
  return (x - std::numbers::sqrt2_v<long double>)*lf * lf;
}

long double c4_hf(const Vector& x) {
  long double v = (static_cast<long double>(x[0]) - 1.0L) *
                  (static_cast<long double>(x[0]) - 1.0L);
  for (int i = 1; i < x.size(); ++i) {
    const long double xi = x[i], prev = x[i - 1];
    const long double t = 2.0L * xi * xi - prev;
    v += t * t;
  }
  return v;
}
long double c4_lf(const Vector& x) {
  long double cross = 0.0L;
  for (int i = 1; i < x.size(); ++i)
    cross += 0.4L * static_cast<long double>(x[i - 1]) * static_cast<long double>(x[i]);
  return 0.8L * c4_hf(x) - cross - 50.0L;
}

long double value(int case_id, bench::Fidelity fid, const Vector& x) {
  const bool hf = fid == bench::Fidelity::kHf;
  switch (case_id) {
    case 1: return hf ? c1_hf(x[0]) : c1_lf(x[0]);
    case 2: return hf ? c2_hf(x[0]) : c2_lf(x[0]);
    case 3: return hf ? c3_hf(x[0]) : c3_lf(x[0]);
    default: return hf ? c4_hf(x) : c4_lf(x);
  }
}

}  // namespace oracle

// Criterion 9: benchmark definitions against the extended-precision oracle
// at 1000 random points per case, plus the case-2 jump magnitudes measured
// just off the breakpoint.
bool criterion_9() {
  std::printf("criterion 9: benchmark values vs extended-precision oracle\n");
  bool pass = true;
  Rng rng(909);
  for (int case_id = 1; case_id <= 4; ++case_id) {
    const auto id = bench::case_from_int(case_id);
    const int dim = bench::case_dim(id);
    const double lo = dim == 20 ? -3.0 : 0.0;
    const double hi = dim == 20 ? 3.0 : 1.0;
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      Vector x(dim);
      for (int c = 0; c < dim; ++c) x[c] = rng.uniform(lo, hi);
      if (case_id == 2 && x[0] == 0.5) continue;
      for (const auto fid : {bench::Fidelity::kHf, bench::Fidelity::kLf}) {
        const double got = bench::eval_case(id, fid, x);
        const long double want = oracle::value(case_id, fid, x);
        const double err = std::abs(static_cast<long double>(got) - want) /
                           std::max(1.0L, std::abs(want));
        worst = std::max(worst, err);
      }
    }
    std::printf("  case %d: worst relative error %.3g (bar 1e-12)\n", case_id, worst);
    pass = pass && worst <= 1e-12;
  }

  {
    Vector left(1), right(1);
    left << 0.5 - 1e-9;
    right << 0.5 + 1e-9;
    const auto id = bench::CaseId::kDiscontinuous;
    const double lf_jump = bench::eval_case(id, bench::Fidelity::kLf, right) -
                           bench::eval_case(id, bench::Fidelity::kLf, left);
    const double hf_jump = bench::eval_case(id, bench::Fidelity::kHf, right) -
                           bench::eval_case(id, bench::Fidelity::kHf, left);
    std::printf("  case 2 jumps at 0.5 +- 1e-9: lf %.9f (want 3), hf %.9f (want 10)\n",
                lf_jump, hf_jump);
    pass = pass && std::abs(lf_jump - 3.0) <= 1e-6 && std::abs(hf_jump - 10.0) <= 1e-6;
  }

  std::printf("criterion 9: %s\n", pass ? "PASS" : "FAIL");
  return pass;
}

// Runs the command-line dispatcher in-process with console streams captured.
int run_cli(std::vector<std::string> args, std::string& output) {
  std::ostringstream captured;
  std::streambuf* old_out = std::cout.rdbuf(captured.rdbuf());
  std::streambuf* old_err = std::cerr.rdbuf(captured.rdbuf());
  int rc = -1;
  try {
    rc = cli::run(std::move(args));
  } catch (...) {
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    throw;
  }
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  output = captured.str();
  return rc;
}

// Criterion 10: the CSV pathway end to end. Case-3 samples are written to
// CSV files, a two-step model is trained and applied through the command
// line alone, and the predictions read back from disk must reach the same
// quality bar the in-process runs reach.
bool criterion_10() {
  std::printf("criterion 10: CSV train/predict pathway on case-3 data, seeds 1..5\n");
  std::printf("  bars: exit code 0 at every step, r2>=0.98 from the predictions file\n");
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "mufide_acceptance" / "csv_pathway";

  const int n_grid = 300;
  Matrix grid(n_grid, 1);
  for (int i = 0; i < n_grid; ++i) grid(i, 0) = static_cast<double>(i) / (n_grid - 1);
  const Vector truth =
      bench::eval_case_many(bench::CaseId::kNonlinearCorrelation, bench::Fidelity::kHf, grid);

  int good = 0;
  for (int seed : kSeeds) {
    const fs::path dir = root / ("seed_" + std::to_string(seed));
    fs::remove_all(dir);
    fs::create_directories(dir);
    Rng data_rng = Rng(static_cast<std::uint64_t>(seed)).derive(0x5A);
    const MfDataset data = bench::sample_case(bench::CaseId::kNonlinearCorrelation, data_rng);
    csv::write_xy_csv((dir / "hf.csv").string(), data.hf_inputs, data.hf_outputs);
    csv::write_xy_csv((dir / "lf.csv").string(), data.lf_inputs, data.lf_outputs);
    csv::write_csv((dir / "grid.csv").string(), {"x1"}, grid);

    std::string train_log, predict_log;
    const int train_rc = run_cli({"train", "--arch", "two-step", "--hf",
                                  (dir / "hf.csv").string(), "--lf", (dir / "lf.csv").string(),
                                  "--out", (dir / "model.json").string(), "--budget", "6",
                                  "--seed", std::to_string(seed)},
                                 train_log);
    int predict_rc = -1;
    double r2 = std::numeric_limits<double>::quiet_NaN();
    if (train_rc == 0) {
      predict_rc = run_cli({"predict", "--model", (dir / "model.json").string(), "--input",
                            (dir / "grid.csv").string(), "--out", (dir / "pred.csv").string()},
                           predict_log);
      if (predict_rc == 0) {
        const csv::Table table = csv::read_csv((dir / "pred.csv").string());
        const Vector pred = table.values.col(table.values.cols() - 1);
        r2 = bench::compute_metrics(truth, pred).r2_value();
      }
    }
    const bool seed_ok = train_rc == 0 && predict_rc == 0 && r2 >= 0.98;
    std::printf("  seed %d: %s (train rc %d, predict rc %d, r2 %.6f)\n", seed,
                seed_ok ? "ok" : "BAR MISSED", train_rc, predict_rc, r2);
    if (!seed_ok) {
      if (!train_log.empty()) std::printf("    train output: %s\n", train_log.c_str());
      if (!predict_log.empty()) std::printf("    predict output: %s\n", predict_log.c_str());
    }
    std::fflush(stdout);
    if (seed_ok) ++good;
  }
  const bool pass = good >= kSeedsNeeded;
  std::printf("criterion 10: %s (%d/%d seeds clear every bar, need >= %d)\n",
              pass ? "PASS" : "FAIL", good, kSeedCount, kSeedsNeeded);
  return pass;
}

using CriterionFn = bool (*)();
constexpr CriterionFn kCriteria[] = {criterion_1, criterion_2, criterion_3, criterion_4,
                                     criterion_5, criterion_6, criterion_7, criterion_8,
                                     criterion_9, criterion_10};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
      if (only < 1 || only > 10) {
        std::fprintf(stderr, "error: --criterion takes a number from 1 to 10\n");
        return 2;
      }
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]\n");
      return 2;
    }
  }

  int failed = 0;
  for (int number = 1; number <= 10; ++number) {
    if (only != 0 && number != only) continue;
    const auto started = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = kCriteria[number - 1]();
    } catch (const std::exception& e) {
      std::printf("criterion %d: FAIL (unexpected exception: %s)\n", number, e.what());
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::printf("criterion %d took %.1f min\n\n", number, minutes(seconds));
    std::fflush(stdout);
    if (!ok) ++failed;
  }
  if (failed > 0) std::printf("%d criterion(s) failed\n", failed);
  return failed == 0 ? 0 : 1;
}
