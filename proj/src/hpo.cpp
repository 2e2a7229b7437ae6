#include "mufide/hpo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>

#include "mufide/parallel.hpp"
#include "mufide/scaler.hpp"

namespace mufide::hpo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

double config_double(const Config& c, const std::string& key) {
  auto it = c.find(key);
  if (it == c.end()) throw ConfigError("config: missing key '" + key + "'");
  if (const double* v = std::get_if<double>(&it->second)) return *v;
  if (const std::int64_t* v = std::get_if<std::int64_t>(&it->second))
    return static_cast<double>(*v);
  throw ConfigError("config: key '" + key + "' is not numeric");
}

std::int64_t config_int(const Config& c, const std::string& key) {
  auto it = c.find(key);
  if (it == c.end()) throw ConfigError("config: missing key '" + key + "'");
  if (const std::int64_t* v = std::get_if<std::int64_t>(&it->second)) return *v;
  throw ConfigError("config: key '" + key + "' is not an integer");
}

const std::string& config_string(const Config& c, const std::string& key) {
  auto it = c.find(key);
  if (it == c.end()) throw ConfigError("config: missing key '" + key + "'");
  if (const std::string* v = std::get_if<std::string>(&it->second)) return *v;
  throw ConfigError("config: key '" + key + "' is not a string");
}

Dimension Dimension::uniform(std::string name, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("dimension '" + name + "': need lo < hi");
  Dimension d;
  d.name = std::move(name);
  d.kind = Kind::kUniform;
  d.lo = lo;
  d.hi = hi;
  return d;
}

Dimension Dimension::log_uniform(std::string name, double lo, double hi) {
  if (!(0.0 < lo && lo < hi)) throw ConfigError("dimension '" + name + "': need 0 < lo < hi");
  Dimension d;
  d.name = std::move(name);
  d.kind = Kind::kLogUniform;
  d.lo = lo;
  d.hi = hi;
  return d;
}

Dimension Dimension::uniform_int(std::string name, std::int64_t lo, std::int64_t hi) {
  if (!(lo < hi)) throw ConfigError("dimension '" + name + "': need lo < hi");
  Dimension d;
  d.name = std::move(name);
  d.kind = Kind::kUniformInt;
  d.lo = static_cast<double>(lo);
  d.hi = static_cast<double>(hi);
  return d;
}

Dimension Dimension::categorical(std::string name, std::vector<std::string> choices) {
  if (choices.size() < 2) throw ConfigError("dimension '" + name + "': need >= 2 choices");
  Dimension d;
  d.name = std::move(name);
  d.kind = Kind::kCategorical;
  d.choices = std::move(choices);
  return d;
}

Config sample_uniform(const SearchSpace& space, Rng& rng) {
  Config c;
  for (const Dimension& d : space.dims) {
    switch (d.kind) {
      case Dimension::Kind::kUniform:
        c[d.name] = rng.uniform(d.lo, d.hi);
        break;
      case Dimension::Kind::kLogUniform:
        c[d.name] = std::exp(rng.uniform(std::log(d.lo), std::log(d.hi)));
        break;
      case Dimension::Kind::kUniformInt: {
        const auto span = static_cast<std::uint64_t>(d.hi - d.lo) + 1;
        c[d.name] = static_cast<std::int64_t>(d.lo) +
                    static_cast<std::int64_t>(rng.uniform_int(span));
        break;
      }
      case Dimension::Kind::kCategorical:
        c[d.name] = d.choices[rng.uniform_int(d.choices.size())];
        break;
    }
  }
  return c;
}

CvPlan default_cv_plan(int n_hf) {
  CvPlan plan;
  if (n_hf <= 10) {
    plan.mode = CvMode::kLoocv;
    plan.k = n_hf;
  } else {
    plan.mode = CvMode::kKFold;
    plan.k = 5;
  }
  return plan;
}

std::vector<Fold> make_folds(int n, const CvPlan& plan) {
  const int k = plan.mode == CvMode::kLoocv ? n : plan.k;
  if (n < 2) throw ConfigError("make_folds: need at least 2 points");
  if (k < 2 || k > n)
    throw ConfigError("make_folds: k must lie in [2, n], got k=" + std::to_string(k) +
                      " n=" + std::to_string(n));

  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  Rng rng(plan.shuffle_seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }

  // First (n mod k) folds take one extra point.
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  const int base = n / k, extra = n % k;
  int cursor = 0;
  for (int f = 0; f < k; ++f) {
    const int size = base + (f < extra ? 1 : 0);
    auto& fold = folds[static_cast<std::size_t>(f)];
    fold.val_idx.assign(idx.begin() + cursor, idx.begin() + cursor + size);
    std::sort(fold.val_idx.begin(), fold.val_idx.end());
    cursor += size;
  }
  for (int f = 0; f < k; ++f) {
    auto& fold = folds[static_cast<std::size_t>(f)];
    for (int i = 0; i < n; ++i)
      if (!std::binary_search(fold.val_idx.begin(), fold.val_idx.end(), i))
        fold.train_idx.push_back(i);
  }
  return folds;
}

double cross_validate(const ModelBuilder& builder, const MfDataset& data,
                      const Config& cfg, const CvPlan& plan, std::uint64_t trial_seed) {
  data.validate();
  const std::vector<Fold> folds = make_folds(data.n_hf(), plan);
  const double range = MinMaxScaler::fit(data.hf_outputs).range1();
  const double denom = range == 0.0 ? 1.0 : range;

  std::vector<double> fold_mse(folds.size(), 0.0);
  std::vector<std::exception_ptr> errors(folds.size());

  par::parallel_for(static_cast<std::int64_t>(folds.size()), [&](std::int64_t f) {
    try {
      const Fold& fold = folds[static_cast<std::size_t>(f)];
      const MfDataset train = data.hf_subset(fold.train_idx);
      const std::uint64_t fold_seed =
          Rng(trial_seed).derive(static_cast<std::uint64_t>(f)).next_u64();
      FoldPredictor predict = builder(train, cfg, fold_seed);
      double acc = 0.0;
      for (int vi : fold.val_idx) {
        const double pred = predict(data.hf_inputs.row(vi).transpose());
        const double err = (pred - data.hf_outputs[vi]) / denom;
        acc += err * err;
      }
      fold_mse[static_cast<std::size_t>(f)] = acc / static_cast<double>(fold.val_idx.size());
    } catch (...) {
      errors[static_cast<std::size_t>(f)] = std::current_exception();
    }
  });

  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  double mean = 0.0;
  for (double m : fold_mse) mean += m;
  return mean / static_cast<double>(fold_mse.size());
}

namespace {

// One numeric dimension's Parzen mixture (values already in model space:
// log-transformed for log dimensions).
struct ParzenMixture {
  std::vector<double> mu;
  std::vector<double> sigma;

  static ParzenMixture build(std::vector<double> values, double lo, double hi) {
    ParzenMixture p;
    if (values.empty()) return p;
    std::sort(values.begin(), values.end());
    const double range = hi - lo;
    const double min_bw = 0.01 * range, max_bw = range;
    p.mu = values;
    p.sigma.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double left = i == 0 ? values[i] - lo : values[i] - values[i - 1];
      const double right = i + 1 == values.size() ? hi - values[i] : values[i + 1] - values[i];
      p.sigma[i] = std::clamp(std::max(left, right), min_bw, max_bw);
    }
    return p;
  }

  bool empty() const { return mu.empty(); }

  double log_pdf(double x) const {
    // log of (1/n) sum_i N(x; mu_i, sigma_i), evaluated stably.
    double best = -kInf;
    std::vector<double> logs(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
      const double z = (x - mu[i]) / sigma[i];
      logs[i] = -0.5 * z * z - std::log(sigma[i]) -
                0.5 * std::log(2.0 * std::numbers::pi);
      best = std::max(best, logs[i]);
    }
    if (!std::isfinite(best)) return -kInf;
    double acc = 0.0;
    for (double l : logs) acc += std::exp(l - best);
    return best + std::log(acc) - std::log(static_cast<double>(mu.size()));
  }

  double sample(Rng& rng, double lo, double hi) const {
    const std::size_t i = rng.uniform_int(mu.size());
    return std::clamp(rng.normal(mu[i], sigma[i]), lo, hi);
  }
};

struct CategoricalModel {
  std::vector<double> log_prob;  // add-one smoothed

  static CategoricalModel build(const std::vector<std::size_t>& counts, std::size_t total) {
    CategoricalModel m;
    const double denom = static_cast<double>(total + counts.size());
    m.log_prob.resize(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
      m.log_prob[i] = std::log(static_cast<double>(counts[i] + 1) / denom);
    return m;
  }

  std::size_t sample(Rng& rng) const {
    const double u = rng.uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i < log_prob.size(); ++i) {
      acc += std::exp(log_prob[i]);
      if (u < acc) return i;
    }
    return log_prob.size() - 1;
  }
};

double numeric_value(const ConfigValue& v) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  if (const std::int64_t* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  throw ConfigError("trial config value is not numeric");
}

}  // namespace

Config tpe_suggest(const SearchSpace& space, const std::vector<Trial>& history,
                   const TpeOptions& opt, Rng& rng) {
  if (space.dims.empty()) throw ConfigError("tpe_suggest: empty search space");

  std::vector<const Trial*> ok;
  std::vector<const Trial*> failed;
  for (const Trial& t : history)
    (t.ok ? ok : failed).push_back(&t);

  if (static_cast<int>(ok.size()) < opt.n_startup) return sample_uniform(space, rng);

  std::stable_sort(ok.begin(), ok.end(),
                   [](const Trial* a, const Trial* b) { return a->objective < b->objective; });
  const std::size_t n_good = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::ceil(opt.gamma * static_cast<double>(ok.size()))));

  std::vector<const Trial*> good(ok.begin(), ok.begin() + static_cast<std::ptrdiff_t>(n_good));
  std::vector<const Trial*> bad(ok.begin() + static_cast<std::ptrdiff_t>(n_good), ok.end());
  bad.insert(bad.end(), failed.begin(), failed.end());

  const int nc = opt.n_candidates;
  const std::size_t nd = space.dims.size();
  // candidate value per (dimension, candidate), in model space
  std::vector<std::vector<double>> cand_num(nd);
  std::vector<std::vector<std::size_t>> cand_cat(nd);
  std::vector<double> score(static_cast<std::size_t>(nc), 0.0);

  for (std::size_t di = 0; di < nd; ++di) {
    const Dimension& dim = space.dims[di];
    const bool log_space = dim.kind == Dimension::Kind::kLogUniform;
    const double lo = log_space ? std::log(dim.lo) : dim.lo;
    const double hi = log_space ? std::log(dim.hi) : dim.hi;

    if (dim.kind == Dimension::Kind::kCategorical) {
      std::vector<std::size_t> cg(dim.choices.size(), 0), cb(dim.choices.size(), 0);
      auto index_of = [&](const Trial* t) {
        const std::string& s = std::get<std::string>(t->config.at(dim.name));
        for (std::size_t i = 0; i < dim.choices.size(); ++i)
          if (dim.choices[i] == s) return i;
        throw ConfigError("trial holds unknown choice '" + s + "' for '" + dim.name + "'");
      };
      for (const Trial* t : good) cg[index_of(t)]++;
      for (const Trial* t : bad) cb[index_of(t)]++;
      const CategoricalModel l = CategoricalModel::build(cg, good.size());
      const CategoricalModel g = CategoricalModel::build(cb, bad.size());
      cand_cat[di].resize(static_cast<std::size_t>(nc));
      for (int c = 0; c < nc; ++c) {
        const std::size_t pick = l.sample(rng);
        cand_cat[di][static_cast<std::size_t>(c)] = pick;
        score[static_cast<std::size_t>(c)] += l.log_prob[pick] - g.log_prob[pick];
      }
      continue;
    }

    auto collect = [&](const std::vector<const Trial*>& set) {
      std::vector<double> vals;
      vals.reserve(set.size());
      for (const Trial* t : set) {
        double v = numeric_value(t->config.at(dim.name));
        if (log_space) v = std::log(v);
        vals.push_back(v);
      }
      return vals;
    };
    const ParzenMixture l = ParzenMixture::build(collect(good), lo, hi);
    const ParzenMixture g = ParzenMixture::build(collect(bad), lo, hi);

    cand_num[di].resize(static_cast<std::size_t>(nc));
    for (int c = 0; c < nc; ++c) {
      const double v = l.empty() ? rng.uniform(lo, hi) : l.sample(rng, lo, hi);
      cand_num[di][static_cast<std::size_t>(c)] = v;
      const double log_l = l.empty() ? -std::log(hi - lo) : l.log_pdf(v);
      // An empty bad set scores as the uniform density over the range.
      const double log_g = g.empty() ? -std::log(hi - lo) : g.log_pdf(v);
      score[static_cast<std::size_t>(c)] += log_l - log_g;
    }
  }

  std::size_t best = 0;
  for (std::size_t c = 1; c < static_cast<std::size_t>(nc); ++c)
    if (score[c] > score[best]) best = c;

  Config out;
  for (std::size_t di = 0; di < nd; ++di) {
    const Dimension& dim = space.dims[di];
    switch (dim.kind) {
      case Dimension::Kind::kUniform:
        out[dim.name] = std::clamp(cand_num[di][best], dim.lo, dim.hi);
        break;
      case Dimension::Kind::kLogUniform:
        out[dim.name] = std::clamp(std::exp(cand_num[di][best]), dim.lo, dim.hi);
        break;
      case Dimension::Kind::kUniformInt: {
        const double r = std::round(cand_num[di][best]);
        out[dim.name] = static_cast<std::int64_t>(std::clamp(r, dim.lo, dim.hi));
        break;
      }
      case Dimension::Kind::kCategorical:
        out[dim.name] = dim.choices[cand_cat[di][best]];
        break;
    }
  }
  return out;
}

OptimizeResult optimize(const SearchSpace& space, const ObjectiveFn& objective, int budget,
                        const TpeOptions& opt, std::uint64_t seed) {
  if (budget < 1) throw ConfigError("optimize: budget must be >= 1");

  OptimizeResult result;
  result.trials.reserve(static_cast<std::size_t>(budget));
  Rng suggest_rng = Rng(seed).derive(0x7065);  // suggestion stream

  for (int t = 0; t < budget; ++t) {
    Trial trial;
    trial.config = tpe_suggest(space, result.trials, opt, suggest_rng);
    trial.seed = Rng(seed).derive(static_cast<std::uint64_t>(t) + 1).next_u64();
    const auto t0 = std::chrono::steady_clock::now();
    try {
      trial.objective = objective(trial.config, trial.seed);
      trial.ok = std::isfinite(trial.objective);
      if (!trial.ok) trial.objective = kInf;
    } catch (const std::exception&) {
      trial.ok = false;
      trial.objective = kInf;
    }
    trial.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.trials.push_back(std::move(trial));
  }

  const Trial* best = nullptr;
  for (const Trial& t : result.trials)
    if (t.ok && (!best || t.objective < best->objective)) best = &t;
  if (!best) throw AllTrialsFailed("optimize: no trial finished successfully");
  result.best_config = best->config;
  result.best_objective = best->objective;
  return result;
}

SearchSpace default_search_space(const std::string& variant) {
  SearchSpace s;
  s.dims.push_back(Dimension::categorical(
      "initializer", {"uniform", "normal", "glorot_uniform", "glorot_normal"}));
  s.dims.push_back(Dimension::categorical("optimizer", {"adam", "adamax"}));
  s.dims.push_back(Dimension::log_uniform("learning_rate", 1e-4, 1e-1));
  s.dims.push_back(Dimension::log_uniform("l2_penalty", 1e-8, 1e-1));
  if (variant == "intermediate" || variant == "gpmimic") {
    s.dims.push_back(Dimension::log_uniform("alpha", 1e-4, 1.0));
    s.dims.push_back(Dimension::uniform_int("depth", 1, 4));
    s.dims.push_back(Dimension::uniform_int("width", 10, 120));
  } else if (variant == "two_step") {
    s.dims.push_back(Dimension::uniform_int("hf_width", 10, 120));
  } else if (variant == "three_step") {
    s.dims.push_back(Dimension::uniform_int("hf_width", 10, 120));
    s.dims.push_back(Dimension::uniform_int("lin_width", 10, 120));
  } else if (variant == "single_fidelity") {
    s.dims.push_back(Dimension::uniform_int("depth", 1, 4));
    s.dims.push_back(Dimension::uniform_int("width", 10, 120));
  } else {
    throw ConfigError("no search space for variant '" + variant + "'");
  }
  return s;
}

}  // namespace mufide::hpo
