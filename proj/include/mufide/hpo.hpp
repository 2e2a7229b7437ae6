#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "mufide/dataset.hpp"
#include "mufide/rng.hpp"

namespace mufide::hpo {

using ConfigValue = std::variant<double, std::int64_t, std::string>;
using Config = std::map<std::string, ConfigValue>;

// Checked accessors; a missing key or wrong-typed value is a ConfigError.
double config_double(const Config& c, const std::string& key);
std::int64_t config_int(const Config& c, const std::string& key);
const std::string& config_string(const Config& c, const std::string& key);

struct Dimension {
  enum class Kind { kUniform, kLogUniform, kUniformInt, kCategorical };

  static Dimension uniform(std::string name, double lo, double hi);
  static Dimension log_uniform(std::string name, double lo, double hi);
  static Dimension uniform_int(std::string name, std::int64_t lo, std::int64_t hi);
  static Dimension categorical(std::string name, std::vector<std::string> choices);

  std::string name;
  Kind kind = Kind::kUniform;
  double lo = 0.0, hi = 1.0;         // numeric bounds (int bounds inclusive)
  std::vector<std::string> choices;  // categorical only
};

struct SearchSpace {
  std::vector<Dimension> dims;
};

// Uniform draw from the whole box.
Config sample_uniform(const SearchSpace& space, Rng& rng);

struct Trial {
  Config config;
  // +inf while status is failed; JSON serialization writes null there.
  double objective = 0.0;
  bool ok = false;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
};

// Cross-validation folds over high-fidelity indices only.
struct Fold {
  std::vector<int> train_idx;
  std::vector<int> val_idx;
};

enum class CvMode { kKFold, kLoocv };

struct CvPlan {
  CvMode mode = CvMode::kKFold;
  int k = 5;
  std::uint64_t shuffle_seed = 0;
};

// Leave-one-out up to 10 high-fidelity points, 5-fold beyond.
CvPlan default_cv_plan(int n_hf);

// Shuffled partition into k groups with sizes differing by at most one.
// Leave-one-out is k-fold with k = n. Every index lands in exactly one
// validation set.
std::vector<Fold> make_folds(int n, const CvPlan& plan);

// A builder trains a model on the fold's training data (full low-fidelity
// set included) and returns a high-fidelity predictor. fold_seed is derived
// from (trial_seed, fold index).
using FoldPredictor = std::function<double(const Vector& x)>;
using ModelBuilder = std::function<FoldPredictor(
    const MfDataset& train, const Config& cfg, std::uint64_t fold_seed)>;

// Mean held-out MSE across folds, computed in scaled units: residuals are
// divided by the min-max range of the FULL dataset's high-fidelity outputs,
// so scores are comparable across folds and trials. Folds run in parallel;
// per-fold results combine in fold order. Builder failures propagate (the
// caller records the trial as failed; completed folds are discarded).
double cross_validate(const ModelBuilder& builder, const MfDataset& data,
                      const Config& cfg, const CvPlan& plan, std::uint64_t trial_seed);

struct TpeOptions {
  double gamma = 0.25;    // quantile that separates good from bad
  int n_startup = 10;     // uniform sampling until this many ok trials exist
  int n_candidates = 24;  // candidates drawn from the good-set density
};

// One suggestion from the tree-structured Parzen estimator. Ok trials are
// split by objective at the gamma quantile (good set size max(1,
// ceil(gamma * n_ok))); failed trials join the bad set (objective +inf).
// Numeric dimensions use per-point Gaussian bandwidths equal to the larger
// gap to the neighboring values (bounds count as neighbors), clamped to
// [1%, 100%] of the range; log dimensions work in log space; integer
// dimensions round at the end; categorical dimensions use add-one smoothed
// frequencies. Candidates are drawn from the good-set density and ranked by
// the density ratio.
Config tpe_suggest(const SearchSpace& space, const std::vector<Trial>& history,
                   const TpeOptions& opt, Rng& rng);

// Objective evaluated per trial; any thrown std::exception marks the trial
// failed. trial_seed is derived from (seed, trial index).
using ObjectiveFn = std::function<double(const Config& cfg, std::uint64_t trial_seed)>;

struct OptimizeResult {
  Config best_config;
  double best_objective = 0.0;
  std::vector<Trial> trials;
};

// Sequential TPE loop over the given trial budget. Throws AllTrialsFailed
// when nothing succeeds.
OptimizeResult optimize(const SearchSpace& space, const ObjectiveFn& objective, int budget,
                        const TpeOptions& opt, std::uint64_t seed);

// Hyperparameter box for a named network variant: shared training knobs
// (initializer, optimizer, learning rate, weight penalty), the fidelity mix
// weight for the all-in-one variants, and the size dimensions each variant
// tunes (intermediate: the layers after the low-fidelity readout; gpmimic and
// single_fidelity: the trunk; two_step/three_step: the tuned hidden widths).
SearchSpace default_search_space(const std::string& variant);

}  // namespace mufide::hpo
