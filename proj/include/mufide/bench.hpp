#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mufide/dataset.hpp"
#include "mufide/gp.hpp"
#include "mufide/hpo.hpp"
#include "mufide/mfnn.hpp"
#include "mufide/rng.hpp"

namespace mufide::bench {

// Four analytic test problems. The first three are 1-D on [0,1]; the fourth
// is 20-D on [-3,3]^20. Numeric values are stable identifiers used by the
// CLI and by per-case seed derivation.
enum class CaseId : int {
  kLinearCorrelation = 1,   // HF and LF linearly correlated
  kDiscontinuous = 2,       // piecewise definitions, jumps at x = 0.5
  kNonlinearCorrelation = 3,  // HF quadratic in the LF value
  kHighDim20 = 4,
};

enum class Fidelity { kHf, kLf };

CaseId case_from_int(int id);
int case_dim(CaseId id);
// Per-coordinate closed interval; every coordinate shares the same bounds.
std::pair<double, double> case_bounds(CaseId id);

// Exact formula evaluation. Case 2 is undefined at x = 0.5 exactly (both
// branches exclude it); everywhere else both fidelities are total on the box.
// errors: OutOfDomain, AtDiscontinuity, DimensionMismatch.
double eval_case(CaseId id, Fidelity fid, const Vector& x);
Vector eval_case_many(CaseId id, Fidelity fid, const Matrix& x);

// The case's training plan. Cases 1-3 use endpoint-inclusive equally spaced
// grids (case 2 adds 10 extra LF points on [0.45,0.55]; none of its grids
// can land on 0.5). Case 4 draws uniform random points from rng; the count
// overrides apply to case 4 only (0 keeps the defaults 5000 HF / 30000 LF)
// and are rejected elsewhere.
MfDataset sample_case(CaseId id, Rng& rng, int n_hf_override = 0, int n_lf_override = 0);

// Test plan: 1-D cases use an n-point grid (case 2's grid nudges any point
// that falls exactly on the discontinuity one ulp right); case 4 draws n
// uniform random points. n = 0 means default_test_count.
int default_test_count(CaseId id);
Matrix test_inputs(CaseId id, int n, Rng& rng);

struct Metrics {
  double mse = 0.0;
  // Absent when the targets have zero variance.
  std::optional<double> r2;
  int n_test = 0;
  double elapsed_seconds = 0.0;

  // errors: DegenerateTargets when r2 is absent.
  double r2_value() const;
};

// MSE and R^2 = 1 - SSE/SST against the targets. elapsed_seconds is left 0;
// the experiment runner fills it. errors: DimensionMismatch, EmptyData (n < 2).
Metrics compute_metrics(const Vector& targets, const Vector& predictions);

enum class ModelKind : int {
  kCokriging = 0,
  kIntermediate = 1,
  kGpmimic = 2,
  kTwoStep = 3,
  kThreeStep = 4,
  kSingleFidelity = 5,
};

// Hyphenated display form ("two-step"); parsing accepts hyphens or
// underscores. errors: ConfigError for unknown names.
std::string display_name(ModelKind kind);
ModelKind model_from_string(const std::string& name);

// Network variant behind a model kind; co-kriging has none (ConfigError).
mfnn::Variant variant_of(ModelKind kind);

// Cases 1-3: all six models in table order. Case 4: the deep pair only
// (three-step against the single-fidelity baseline); GP baselines are
// impractical at 30000 training points.
std::vector<ModelKind> default_model_list(CaseId id);

struct ExperimentSettings {
  std::uint64_t seed = 1;
  int budget = 60;       // HPO trials per network model
  int n_test = 0;        // 0 = case default
  int case4_n_hf = 0;    // 0 = default 5000
  int case4_n_lf = 0;    // 0 = default 30000
};

struct ReportRow {
  ModelKind model = ModelKind::kCokriging;
  bool ok = false;
  std::string error;  // failure message when !ok
  // Best cross-validation objective (range-scaled held-out MSE); absent for
  // models that do not run HPO.
  std::optional<double> validation_mse_scaled;
  Metrics test;
  // Winning hyperparameters; for the GP row, fitted kernel parameters.
  hpo::Config config;
};

struct ExperimentResult {
  CaseId case_id = CaseId::kLinearCorrelation;
  ExperimentSettings settings;
  int n_hf = 0, n_lf = 0, n_test = 0;
  std::vector<ReportRow> rows;
  Matrix test_x;
  Vector test_y;
  // Aligned with rows; absent where the model failed.
  std::vector<std::optional<Vector>> predictions;
};

// Kernel pair (LF, residual) for the co-kriging baseline: the erf-network
// kernel on case 1, squared-exponential with per-dimension lengthscales
// elsewhere.
std::pair<gp::Kernel, gp::Kernel> default_cokriging_kernels(CaseId id, int dim);

// Trains one network variant from an HPO config drawn from
// default_search_space(variant). Staged variants reuse the pretrained
// low-fidelity stage when given (the stage is fold-independent: it sees the
// full LF set and its input scaler is fit on LF inputs alone).
// max_epochs caps every training stage; patience and min_delta keep their
// defaults.
mfnn::MfModel build_from_config(mfnn::Variant variant, const MfDataset& data,
                                const hpo::Config& cfg, std::uint64_t seed,
                                const mfnn::LfStage* pretrained_lf, int max_epochs);

// Adapter for cross_validate over build_from_config.
hpo::ModelBuilder make_builder(mfnn::Variant variant, const mfnn::LfStage* pretrained_lf,
                               int max_epochs);

// Full comparison for one case: sample the training data, then per model run
// HPO (LOOCV up to 10 HF points, else 5-fold), refit on everything with the
// winning config, and score on the test plan. The co-kriging row fits by
// marginal likelihood instead of HPO; on case 4 the single-fidelity row uses
// a fixed 3x64 configuration so the baseline stays identical across budgets.
// Per-model failures land in the row's error field without aborting the rest.
// Model rows are independent: seeds derive from the model's identity, so a
// sub-list reproduces the same rows the full list would.
ExperimentResult run_experiment(CaseId id, const std::vector<ModelKind>& models,
                                const ExperimentSettings& settings);

}  // namespace mufide::bench
