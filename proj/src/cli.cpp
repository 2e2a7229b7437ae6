#include "mufide/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "mufide/bench.hpp"
#include "mufide/csv.hpp"
#include "mufide/errors.hpp"
#include "mufide/serialize.hpp"

namespace mufide::cli {
namespace {

namespace fs = std::filesystem;
using serialize::Json;

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t salt) {
  return Rng(seed).derive(salt).next_u64();
}

// Console-facing number format; files use the full 17 digits instead.
std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

double elapsed_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void ensure_parent_dirs(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw DataError(parent.string() + ": cannot create directory: " + ec.message());
}

void make_output_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(dir + ": cannot create directory: " + ec.message());
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = s.find(',', pos);
    const std::size_t end = comma == std::string::npos ? s.size() : comma;
    std::string item = s.substr(pos, end - pos);
    const auto a = item.find_first_not_of(" \t");
    if (a == std::string::npos) {
      item.clear();
    } else {
      const auto b = item.find_last_not_of(" \t");
      item = item.substr(a, b - a + 1);
    }
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

int resolve_max_epochs(int flag, int dim) {
  if (flag < 0) throw ConfigError("--max-epochs must be nonnegative");
  if (flag > 0) return flag;
  return dim == 1 ? 20000 : 3000;
}

// Swaps the final extension for a suffix: model.json -> model<suffix>.
std::string sibling_path(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  p.replace_extension();
  return p.string() + suffix;
}

// ---------------------------------------------------------------------------
// bench: run one benchmark case end to end and write the comparison report.

struct BenchOpts {
  int case_id = 1;
  std::string models;
  std::uint64_t seed = 1;
  int budget = 60;
  int n_test = 0;
  int n_hf = 0;
  int n_lf = 0;
  std::string out_dir = ".";
};

std::string metrics_csv_text(const bench::ExperimentResult& r) {
  std::string text = "model,ok,validation_mse_scaled,test_mse,r2,elapsed_seconds\n";
  for (const auto& row : r.rows) {
    text += bench::display_name(row.model);
    text += row.ok ? ",1," : ",0,";
    if (row.validation_mse_scaled) text += csv::format_double(*row.validation_mse_scaled);
    text += ',';
    if (row.ok) text += csv::format_double(row.test.mse);
    text += ',';
    if (row.ok && row.test.r2) text += csv::format_double(*row.test.r2);
    text += ',';
    text += csv::format_double(row.test.elapsed_seconds);
    text += '\n';
  }
  return text;
}

void run_bench(const BenchOpts& o) {
  const bench::CaseId id = bench::case_from_int(o.case_id);
  std::vector<bench::ModelKind> models;
  if (o.models.empty()) {
    models = bench::default_model_list(id);
  } else {
    for (const auto& name : split_commas(o.models))
      models.push_back(bench::model_from_string(name));
    if (models.empty()) throw ConfigError("--models: empty model list");
  }

  bench::ExperimentSettings settings;
  settings.seed = o.seed;
  settings.budget = o.budget;
  settings.n_test = o.n_test;
  settings.case4_n_hf = o.n_hf;
  settings.case4_n_lf = o.n_lf;

  make_output_dir(o.out_dir);
  const bench::ExperimentResult r = bench::run_experiment(id, models, settings);

  const fs::path out(o.out_dir);
  serialize::save_json((out / "report.json").string(), serialize::report_to_json(r));
  csv::write_text_atomic((out / "metrics.csv").string(), metrics_csv_text(r));

  const int dim = static_cast<int>(r.test_x.cols());
  std::vector<std::string> header;
  for (int j = 1; j <= dim; ++j) header.push_back("x" + std::to_string(j));
  header.push_back("y_true");
  header.push_back("y_pred");
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    if (!r.predictions[i]) continue;
    Matrix table(r.test_x.rows(), dim + 2);
    table.leftCols(dim) = r.test_x;
    table.col(dim) = r.test_y;
    table.col(dim + 1) = *r.predictions[i];
    const std::string name = "predictions_" + bench::display_name(r.rows[i].model) + ".csv";
    csv::write_csv((out / name).string(), header, table);
  }

  for (const auto& row : r.rows) {
    std::cout << bench::display_name(row.model) << ": ";
    if (!row.ok) {
      std::cout << "FAILED (" << row.error << ")\n";
      continue;
    }
    std::cout << "mse=" << brief(row.test.mse);
    if (row.test.r2) std::cout << " r2=" << brief(*row.test.r2);
    std::cout << " (" << brief(row.test.elapsed_seconds) << " s)\n";
  }
  std::cout << "report: " << (out / "report.json").string() << "\n";
}

// ---------------------------------------------------------------------------
// Shared dataset loading for train/hpo.

MfDataset load_dataset(const std::string& hf_path, const std::string& lf_path, bool need_lf) {
  MfDataset data;
  std::tie(data.hf_inputs, data.hf_outputs) = csv::read_xy_csv(hf_path);
  if (!lf_path.empty()) {
    std::tie(data.lf_inputs, data.lf_outputs) = csv::read_xy_csv(lf_path);
    if (data.lf_inputs.cols() != data.hf_inputs.cols())
      throw DimensionMismatch(hf_path + " has " + std::to_string(data.hf_inputs.cols()) +
                              " input columns but " + lf_path + " has " +
                              std::to_string(data.lf_inputs.cols()));
  } else if (need_lf) {
    throw ConfigError("--lf is required for this architecture");
  } else {
    // Single-fidelity training ignores the low-fidelity slots, but the
    // cross-validation plumbing validates them; mirror the one set we have.
    data.lf_inputs = data.hf_inputs;
    data.lf_outputs = data.hf_outputs;
  }
  data.validate();
  return data;
}

// HPO search shared by the train and hpo subcommands. The stage slot keeps
// the pretrained low-fidelity network alive for the caller's final fit.
hpo::OptimizeResult run_search(mfnn::Variant variant, const MfDataset& data,
                               const mfnn::LfStage* stage, int budget, std::uint64_t seed,
                               std::uint64_t salt, int max_epochs) {
  if (budget < 1) throw ConfigError("--budget must be at least 1");
  const hpo::SearchSpace space = hpo::default_search_space(mfnn::to_string(variant));
  hpo::CvPlan plan = hpo::default_cv_plan(data.n_hf());
  plan.shuffle_seed = seed;
  const hpo::ModelBuilder builder = bench::make_builder(variant, stage, max_epochs);
  const hpo::ObjectiveFn objective = [&](const hpo::Config& cfg, std::uint64_t trial_seed) {
    return hpo::cross_validate(builder, data, cfg, plan, trial_seed);
  };
  return hpo::optimize(space, objective, budget, hpo::TpeOptions{}, sub_seed(seed, salt));
}

const mfnn::LfStage* maybe_stage(std::optional<mfnn::LfStage>& slot, mfnn::Variant variant,
                                 const MfDataset& data, int max_epochs, std::uint64_t seed) {
  if (variant != mfnn::Variant::kTwoStep && variant != mfnn::Variant::kThreeStep)
    return nullptr;
  mfnn::MultilevelConfig cfg;
  cfg.lf_train.max_epochs = max_epochs;
  slot.emplace(mfnn::train_lf_stage(data, cfg, sub_seed(seed, 0x1F5)));
  return &*slot;
}

// ---------------------------------------------------------------------------
// train: fit one model on CSV data and save it.

struct TrainOpts {
  std::string hf_path;
  std::string lf_path;
  std::string arch;
  std::uint64_t seed = 1;
  int budget = 60;
  std::string config_path;
  std::string out_path = "model.json";
  std::string trials_path;
  int max_epochs = 0;
  double noise_std = 1e-5;
};

void run_train(const TrainOpts& o) {
  const auto started = std::chrono::steady_clock::now();
  const bench::ModelKind kind = bench::model_from_string(o.arch);

  Json report;
  report["format"] = "mufide-train-report-v1";
  report["arch"] = bench::display_name(kind);
  report["seed"] = o.seed;
  report["model_path"] = o.out_path;

  if (kind == bench::ModelKind::kCokriging) {
    const MfDataset data = load_dataset(o.hf_path, o.lf_path, /*need_lf=*/true);
    const int dim = data.input_dim();
    gp::MleOptions mle;
    mle.noise_std_lf = mle.noise_std_hf = o.noise_std;
    mle.seed = sub_seed(o.seed, 0xC0);
    const gp::Kernel init = gp::Kernel::rbf(1.0, Vector::Ones(dim));
    const gp::CoKrigingModel model =
        gp::fit_cokriging(init, init, data.lf_inputs, data.lf_outputs, data.hf_inputs,
                          data.hf_outputs, mle);
    ensure_parent_dirs(o.out_path);
    serialize::save_json(o.out_path, serialize::gp_to_json(model));

    report["n_hf"] = data.n_hf();
    report["n_lf"] = data.n_lf();
    report["rho"] = model.rho();
    report["log_marginal_likelihood"] = model.log_marginal_likelihood();
    report["elapsed_seconds"] = elapsed_since(started);
    serialize::save_json(sibling_path(o.out_path, ".report.json"), report);
    std::cout << "cokriging fit: rho=" << brief(model.rho()) << ", model written to "
              << o.out_path << "\n";
    return;
  }

  const mfnn::Variant variant = bench::variant_of(kind);
  const MfDataset data =
      load_dataset(o.hf_path, o.lf_path, variant != mfnn::Variant::kSingleFidelity);
  const int max_epochs = resolve_max_epochs(o.max_epochs, data.input_dim());

  std::optional<mfnn::LfStage> stage_slot;
  const mfnn::LfStage* stage = maybe_stage(stage_slot, variant, data, max_epochs, o.seed);

  hpo::Config cfg;
  if (!o.config_path.empty()) {
    cfg = serialize::config_from_json(serialize::load_json(o.config_path));
  } else {
    const hpo::OptimizeResult res =
        run_search(variant, data, stage, o.budget, o.seed,
                   0x40 + static_cast<std::uint64_t>(kind), max_epochs);
    cfg = res.best_config;
    const std::string trials_path =
        o.trials_path.empty() ? sibling_path(o.out_path, ".trials.jsonl") : o.trials_path;
    ensure_parent_dirs(trials_path);
    serialize::save_trials(trials_path, res.trials);
    report["trials_path"] = trials_path;
    report["budget"] = o.budget;
    report["validation_mse_scaled"] = res.best_objective;
  }

  const mfnn::MfModel model = bench::build_from_config(
      variant, data, cfg, sub_seed(o.seed, 0xF1 + static_cast<std::uint64_t>(kind)), stage,
      max_epochs);
  ensure_parent_dirs(o.out_path);
  serialize::save_model(o.out_path, model);

  const Vector fitted = model.predict_hf_many(data.hf_inputs);
  const double train_mse =
      (fitted - data.hf_outputs).squaredNorm() / static_cast<double>(data.n_hf());

  report["n_hf"] = data.n_hf();
  report["n_lf"] = o.lf_path.empty() ? 0 : data.n_lf();
  report["config"] = serialize::config_to_json(cfg);
  report["train_mse"] = train_mse;
  report["elapsed_seconds"] = elapsed_since(started);
  serialize::save_json(sibling_path(o.out_path, ".report.json"), report);
  std::cout << bench::display_name(kind) << " fit: train mse=" << brief(train_mse)
            << ", model written to " << o.out_path << "\n";
}

// ---------------------------------------------------------------------------
// predict: apply a saved model to a CSV of inputs.

struct PredictOpts {
  std::string model_path;
  std::string input_path;
  std::string out_path;
};

void run_predict(const PredictOpts& o) {
  const Json doc = serialize::load_json(o.model_path);
  const std::string format = doc.contains("format") && doc["format"].is_string()
                                 ? doc["format"].get<std::string>()
                                 : std::string();

  csv::Table table = csv::read_csv(o.input_path);
  const int dim = static_cast<int>(table.values.cols());
  const int n = static_cast<int>(table.values.rows());

  int expect = 0;
  Vector pred(n);
  if (format == "mufide-model-v1") {
    const mfnn::MfModel model = serialize::model_from_json(doc);
    expect = model.input_dim();
    if (dim == expect && n > 0) pred = model.predict_hf_many(table.values);
  } else if (format == "mufide-gp-v1") {
    const std::string gp_kind = doc.value("model", std::string());
    if (gp_kind == "cokriging") {
      const gp::CoKrigingModel model = serialize::cokriging_from_json(doc);
      expect = static_cast<int>(model.train_x_hf().cols());
      if (dim == expect && n > 0) pred = model.predict_hf_mean(table.values);
    } else if (gp_kind == "gpr") {
      const gp::GprModel model = serialize::gpr_from_json(doc);
      expect = static_cast<int>(model.train_x().cols());
      if (dim == expect && n > 0) pred = model.predict_mean(table.values);
    } else {
      throw ParseError(o.model_path + ": unknown model kind '" + gp_kind + "'");
    }
  } else {
    throw ParseError(o.model_path + ": not a recognized model file");
  }
  if (dim != expect)
    throw DimensionMismatch(o.input_path + " has " + std::to_string(dim) +
                            " columns but the model expects " + std::to_string(expect));

  std::vector<std::string> header = table.header;
  header.push_back("y_pred");
  Matrix out_table(n, dim + 1);
  out_table.leftCols(dim) = table.values;
  out_table.col(dim) = pred;
  ensure_parent_dirs(o.out_path);
  csv::write_csv(o.out_path, header, out_table);
  std::cout << n << " predictions written to " << o.out_path << "\n";
}

// ---------------------------------------------------------------------------
// hpo: search hyperparameters only, leaving the final fit to train --config.

struct HpoOpts {
  std::string hf_path;
  std::string lf_path;
  std::string arch;
  std::uint64_t seed = 1;
  int budget = 60;
  std::string trials_path = "trials.jsonl";
  std::string best_path = "best_config.json";
  int max_epochs = 0;
};

void run_hpo(const HpoOpts& o) {
  const bench::ModelKind kind = bench::model_from_string(o.arch);
  if (kind == bench::ModelKind::kCokriging)
    throw ConfigError("cokriging fits by marginal likelihood; it has no search space");
  const mfnn::Variant variant = bench::variant_of(kind);
  const MfDataset data =
      load_dataset(o.hf_path, o.lf_path, variant != mfnn::Variant::kSingleFidelity);
  const int max_epochs = resolve_max_epochs(o.max_epochs, data.input_dim());

  std::optional<mfnn::LfStage> stage_slot;
  const mfnn::LfStage* stage = maybe_stage(stage_slot, variant, data, max_epochs, o.seed);
  const hpo::OptimizeResult res =
      run_search(variant, data, stage, o.budget, o.seed,
                 0x40 + static_cast<std::uint64_t>(kind), max_epochs);

  ensure_parent_dirs(o.trials_path);
  serialize::save_trials(o.trials_path, res.trials);
  ensure_parent_dirs(o.best_path);
  serialize::save_json(o.best_path, serialize::config_to_json(res.best_config));
  std::cout << res.trials.size() << " trials written to " << o.trials_path
            << "; best objective " << brief(res.best_objective) << " saved to " << o.best_path
            << "\n";
}

}  // namespace

int run(std::vector<std::string> args) {
  CLI::App app{"Multi-fidelity regression toolkit"};
  app.name("mufide");
  app.require_subcommand(1);

  BenchOpts bo;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Run one benchmark case and report errors");
  bench_cmd->add_option("--case", bo.case_id, "Benchmark case, 1-4")->required();
  bench_cmd->add_option("--models", bo.models,
                        "Comma-separated model list (default: all models for the case)");
  bench_cmd->add_option("--seed", bo.seed, "Experiment seed");
  bench_cmd->add_option("--budget", bo.budget, "Hyperparameter search trials per model");
  bench_cmd->add_option("--n-test", bo.n_test, "Test point count (0 = case default)");
  bench_cmd->add_option("--n-hf", bo.n_hf, "Training points, high fidelity (case 4 only)");
  bench_cmd->add_option("--n-lf", bo.n_lf, "Training points, low fidelity (case 4 only)");
  bench_cmd->add_option("--out", bo.out_dir, "Output directory");

  TrainOpts to;
  CLI::App* train_cmd = app.add_subcommand("train", "Fit a model on CSV data and save it");
  train_cmd->add_option("--hf", to.hf_path, "High-fidelity training CSV (x1..xd,y)")->required();
  train_cmd->add_option("--lf", to.lf_path, "Low-fidelity training CSV");
  train_cmd->add_option("--arch", to.arch, "Model architecture")->required();
  train_cmd->add_option("--seed", to.seed, "Training seed");
  train_cmd->add_option("--budget", to.budget, "Hyperparameter search trials");
  train_cmd->add_option("--config", to.config_path,
                        "Hyperparameter JSON; skips the search when given");
  train_cmd->add_option("--out", to.out_path, "Model file to write");
  train_cmd->add_option("--trials-out", to.trials_path,
                        "Search history JSONL (default: next to the model file)");
  train_cmd->add_option("--max-epochs", to.max_epochs,
                        "Epoch cap per training stage (0 = dimension default)");
  train_cmd->add_option("--noise-std", to.noise_std, "Observation noise, cokriging only");

  PredictOpts po;
  CLI::App* predict_cmd = app.add_subcommand("predict", "Apply a saved model to input CSV");
  predict_cmd->add_option("--model", po.model_path, "Saved model file")->required();
  predict_cmd->add_option("--input", po.input_path, "Input CSV; every column is a coordinate")
      ->required();
  predict_cmd->add_option("--out", po.out_path, "Output CSV (input columns plus y_pred)")
      ->required();

  HpoOpts ho;
  CLI::App* hpo_cmd =
      app.add_subcommand("hpo", "Search hyperparameters and save the trial history");
  hpo_cmd->add_option("--hf", ho.hf_path, "High-fidelity training CSV (x1..xd,y)")->required();
  hpo_cmd->add_option("--lf", ho.lf_path, "Low-fidelity training CSV");
  hpo_cmd->add_option("--arch", ho.arch, "Model architecture")->required();
  hpo_cmd->add_option("--seed", ho.seed, "Search seed");
  hpo_cmd->add_option("--budget", ho.budget, "Trial count");
  hpo_cmd->add_option("--trials-out", ho.trials_path, "Trial history JSONL to write");
  hpo_cmd->add_option("--best-out", ho.best_path, "Best configuration JSON to write");
  hpo_cmd->add_option("--max-epochs", ho.max_epochs,
                      "Epoch cap per training stage (0 = dimension default)");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (bench_cmd->parsed()) run_bench(bo);
    else if (train_cmd->parsed()) run_train(to);
    else if (predict_cmd->parsed()) run_predict(po);
    else if (hpo_cmd->parsed()) run_hpo(ho);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mufide::cli
