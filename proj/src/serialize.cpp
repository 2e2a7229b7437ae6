#include "mufide/serialize.hpp"

#include <cstdint>
#include <limits>
#include <variant>

#include "mufide/csv.hpp"
#include "mufide/errors.hpp"

namespace mufide::serialize {

namespace {

constexpr const char* kNetTag = "mufide-net-v1";
constexpr const char* kModelTag = "mufide-model-v1";
constexpr const char* kGpTag = "mufide-gp-v1";
constexpr const char* kTrialsTag = "mufide-trials-v1";
constexpr const char* kReportTag = "mufide-report-v1";

void expect_format(const Json& j, const char* tag) {
  if (!j.is_object() || j.value("format", std::string{}) != tag)
    throw ParseError(std::string("expected a \"") + tag + "\" document");
}

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("expected a numeric array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  return v;
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) rows.push_back(vector_to_json(m.row(r).transpose()));
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw ParseError("expected an array of rows");
  const int rows = static_cast<int>(j.size());
  if (rows == 0) return Matrix(0, 0);
  const Vector first = vector_from_json(j[0]);
  Matrix m(rows, first.size());
  m.row(0) = first.transpose();
  for (int r = 1; r < rows; ++r) {
    const Vector row = vector_from_json(j[r]);
    if (row.size() != m.cols()) throw ParseError("ragged matrix rows");
    m.row(r) = row.transpose();
  }
  return m;
}

Json dense_to_json(const nn::Dense& d) {
  Json j;
  j["out"] = d.out_dim();
  j["in"] = d.in_dim();
  j["activation"] = nn::to_string(d.activation);
  Json w = Json::array();
  for (int r = 0; r < d.w.rows(); ++r)
    for (int c = 0; c < d.w.cols(); ++c) w.push_back(d.w(r, c));
  j["w"] = w;
  j["b"] = vector_to_json(d.b);
  return j;
}

nn::Dense dense_from_json(const Json& j) {
  nn::Dense d;
  const int out = j.at("out").get<int>();
  const int in = j.at("in").get<int>();
  if (out < 1 || in < 1) throw ParseError("layer dimensions must be positive");
  d.activation = nn::activation_from_string(j.at("activation").get<std::string>());
  const Json& w = j.at("w");
  if (!w.is_array() || static_cast<int>(w.size()) != out * in)
    throw ParseError("layer weight array has the wrong length");
  d.w.resize(out, in);
  int k = 0;
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c) d.w(r, c) = w[k++].get<double>();
  d.b = vector_from_json(j.at("b"));
  if (d.b.size() != out) throw ParseError("layer bias array has the wrong length");
  return d;
}

// chained enforces plain feed-forward wiring; the all-in-one composite has
// branch layers and validates its own wiring in the AllInOneNet constructor.
std::vector<nn::Dense> layers_from_json(const Json& j, int input_dim, bool chained = true) {
  if (!j.is_array() || j.empty()) throw ParseError("expected a non-empty layer array");
  std::vector<nn::Dense> layers;
  int prev = input_dim;
  for (const Json& lj : j) {
    nn::Dense d = dense_from_json(lj);
    if (chained && d.in_dim() != prev) throw ParseError("layer input width does not chain");
    prev = d.out_dim();
    layers.push_back(std::move(d));
  }
  return layers;
}

Json scaler_to_json(const MinMaxScaler& s) {
  Json j;
  j["min"] = vector_to_json(s.col_min());
  j["max"] = vector_to_json(s.col_max());
  return j;
}

MinMaxScaler scaler_from_json(const Json& j) {
  return MinMaxScaler::from_bounds(vector_from_json(j.at("min")),
                                   vector_from_json(j.at("max")));
}

Json train_to_json(const nn::TrainConfig& t) {
  Json j;
  j["optimizer"] = nn::to_string(t.optimizer);
  j["learning_rate"] = t.learning_rate;
  j["l2_penalty"] = t.l2_penalty;
  j["max_epochs"] = t.max_epochs;
  j["patience"] = t.patience;
  j["min_delta"] = t.min_delta;
  return j;
}

nn::TrainConfig train_from_json(const Json& j) {
  nn::TrainConfig t;
  t.optimizer = nn::optimizer_from_string(j.at("optimizer").get<std::string>());
  t.learning_rate = j.at("learning_rate").get<double>();
  t.l2_penalty = j.at("l2_penalty").get<double>();
  t.max_epochs = j.at("max_epochs").get<int>();
  t.patience = j.at("patience").get<int>();
  t.min_delta = j.at("min_delta").get<double>();
  return t;
}

Json kernel_to_json(const gp::Kernel& k) {
  Json j;
  j["kind"] = k.kind() == gp::Kernel::Kind::kRbf ? "rbf" : "nngp_erf";
  j["params"] = k.raw_params();
  j["depth"] = k.depth();
  return j;
}

gp::Kernel kernel_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const std::vector<double> params = j.at("params").get<std::vector<double>>();
  if (kind == "rbf") {
    if (params.size() < 2) throw ParseError("rbf kernel needs a variance and lengthscales");
    Vector ls(params.size() - 1);
    for (std::size_t i = 1; i < params.size(); ++i) ls[static_cast<int>(i) - 1] = params[i];
    return gp::Kernel::rbf(params[0], ls);
  }
  if (kind == "nngp_erf") {
    if (params.size() != 2) throw ParseError("nngp_erf kernel needs exactly 2 parameters");
    return gp::Kernel::nngp_erf(params[0], params[1], j.at("depth").get<int>());
  }
  throw ParseError("unknown kernel kind '" + kind + "'");
}

// Reading-side wrapper: malformed structure (missing keys, wrong JSON types,
// invalid network wiring) reads as a format error regardless of which layer
// noticed it.
template <class F>
auto as_parse_error(const char* what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const Json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  } catch (const Error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

Json parse_json(const std::string& text, const std::string& context) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError(context + ": not valid JSON");
  return j;
}

Json load_json(const std::string& path) {
  return parse_json(csv::read_text_file(path), path);
}

void save_json(const std::string& path, const Json& j) {
  csv::write_text_atomic(path, j.dump(2) + "\n");
}

Json network_to_json(const nn::Network& net) {
  Json j;
  j["format"] = kNetTag;
  j["input_dim"] = net.input_dim();
  Json layers = Json::array();
  for (const nn::Dense& d : net.layers()) layers.push_back(dense_to_json(d));
  j["layers"] = layers;
  return j;
}

nn::Network network_from_json(const Json& j) {
  return as_parse_error("network", [&] {
    expect_format(j, kNetTag);
    const int input_dim = j.at("input_dim").get<int>();
    if (input_dim < 1) throw ParseError("input_dim must be positive");
    return nn::Network(input_dim, layers_from_json(j.at("layers"), input_dim));
  });
}

Json model_to_json(const mfnn::MfModel& m) {
  Json j;
  j["format"] = kModelTag;
  j["variant"] = mfnn::to_string(m.variant);
  j["x_scaler"] = scaler_to_json(m.x_scaler);
  j["hf_y_scaler"] = scaler_to_json(m.hf_y_scaler);

  Json cfg;
  switch (m.variant) {
    case mfnn::Variant::kIntermediate:
    case mfnn::Variant::kGpmimic: {
      j["lf_y_scaler"] = scaler_to_json(m.lf_y_scaler);
      Json net;
      net["input_dim"] = m.composite.input_dim();
      Json layers = Json::array();
      for (const nn::Dense& d : m.composite.layers()) layers.push_back(dense_to_json(d));
      net["layers"] = layers;
      j["composite"] = net;
      cfg["alpha"] = m.aio_cfg.alpha;
      cfg["depth"] = m.aio_cfg.depth;
      cfg["width"] = m.aio_cfg.width;
      cfg["initializer"] = nn::to_string(m.aio_cfg.initializer);
      cfg["train"] = train_to_json(m.aio_cfg.train);
      break;
    }
    case mfnn::Variant::kTwoStep:
    case mfnn::Variant::kThreeStep: {
      j["lf_y_scaler"] = scaler_to_json(m.lf_y_scaler);
      j["lf_net"] = network_to_json(m.lf_net);
      if (m.variant == mfnn::Variant::kThreeStep)
        j["lin_net"] = network_to_json(m.lin_net);
      j["hf_net"] = network_to_json(m.hf_net);
      Json hidden = Json::array();
      for (const nn::LayerSpec& s : m.ml_cfg.lf_hidden) {
        Json lj;
        lj["width"] = s.width;
        lj["activation"] = nn::to_string(s.activation);
        hidden.push_back(lj);
      }
      cfg["lf_hidden"] = hidden;
      cfg["hf_width"] = m.ml_cfg.hf_width;
      cfg["lin_width"] = m.ml_cfg.lin_width;
      cfg["lin_closed_form"] = m.ml_cfg.lin_closed_form;
      cfg["initializer"] = nn::to_string(m.ml_cfg.initializer);
      cfg["lf_train"] = train_to_json(m.ml_cfg.lf_train);
      cfg["hf_train"] = train_to_json(m.ml_cfg.hf_train);
      cfg["lin_train"] = train_to_json(m.ml_cfg.lin_train);
      break;
    }
    case mfnn::Variant::kSingleFidelity: {
      j["hf_net"] = network_to_json(m.hf_net);
      cfg["depth"] = m.sf_cfg.depth;
      cfg["width"] = m.sf_cfg.width;
      cfg["initializer"] = nn::to_string(m.sf_cfg.initializer);
      cfg["train"] = train_to_json(m.sf_cfg.train);
      break;
    }
  }
  j["config"] = cfg;
  return j;
}

mfnn::MfModel model_from_json(const Json& j) {
  return as_parse_error("model", [&]() -> mfnn::MfModel {
    expect_format(j, kModelTag);
    mfnn::MfModel m;
    m.variant = mfnn::variant_from_string(j.at("variant").get<std::string>());
    m.x_scaler = scaler_from_json(j.at("x_scaler"));
    m.hf_y_scaler = scaler_from_json(j.at("hf_y_scaler"));
    const Json& cfg = j.at("config");

    switch (m.variant) {
      case mfnn::Variant::kIntermediate:
      case mfnn::Variant::kGpmimic: {
        m.lf_y_scaler = scaler_from_json(j.at("lf_y_scaler"));
        const Json& net = j.at("composite");
        const int input_dim = net.at("input_dim").get<int>();
        m.composite = mfnn::AllInOneNet(
            m.variant, input_dim,
            layers_from_json(net.at("layers"), input_dim, /*chained=*/false));
        m.aio_cfg.alpha = cfg.at("alpha").get<double>();
        m.aio_cfg.depth = cfg.at("depth").get<int>();
        m.aio_cfg.width = cfg.at("width").get<int>();
        m.aio_cfg.initializer =
            nn::initializer_from_string(cfg.at("initializer").get<std::string>());
        m.aio_cfg.train = train_from_json(cfg.at("train"));
        break;
      }
      case mfnn::Variant::kTwoStep:
      case mfnn::Variant::kThreeStep: {
        m.lf_y_scaler = scaler_from_json(j.at("lf_y_scaler"));
        m.lf_net = network_from_json(j.at("lf_net"));
        if (m.variant == mfnn::Variant::kThreeStep)
          m.lin_net = network_from_json(j.at("lin_net"));
        m.hf_net = network_from_json(j.at("hf_net"));
        m.ml_cfg.lf_hidden.clear();
        for (const Json& lj : cfg.at("lf_hidden")) {
          nn::LayerSpec s;
          s.width = lj.at("width").get<int>();
          s.activation = nn::activation_from_string(lj.at("activation").get<std::string>());
          m.ml_cfg.lf_hidden.push_back(s);
        }
        m.ml_cfg.hf_width = cfg.at("hf_width").get<int>();
        m.ml_cfg.lin_width = cfg.at("lin_width").get<int>();
        m.ml_cfg.lin_closed_form = cfg.at("lin_closed_form").get<bool>();
        m.ml_cfg.initializer =
            nn::initializer_from_string(cfg.at("initializer").get<std::string>());
        m.ml_cfg.lf_train = train_from_json(cfg.at("lf_train"));
        m.ml_cfg.hf_train = train_from_json(cfg.at("hf_train"));
        m.ml_cfg.lin_train = train_from_json(cfg.at("lin_train"));
        break;
      }
      case mfnn::Variant::kSingleFidelity: {
        m.hf_net = network_from_json(j.at("hf_net"));
        m.sf_cfg.depth = cfg.at("depth").get<int>();
        m.sf_cfg.width = cfg.at("width").get<int>();
        m.sf_cfg.initializer =
            nn::initializer_from_string(cfg.at("initializer").get<std::string>());
        m.sf_cfg.train = train_from_json(cfg.at("train"));
        break;
      }
    }
    if (m.x_scaler.dim() < 1) throw ParseError("model has no input dimensions");
    return m;
  });
}

void save_model(const std::string& path, const mfnn::MfModel& m) {
  save_json(path, model_to_json(m));
}

mfnn::MfModel load_model(const std::string& path) {
  try {
    return model_from_json(load_json(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

Json gp_to_json(const gp::GprModel& m) {
  Json j;
  j["format"] = kGpTag;
  j["model"] = "gpr";
  j["kernel"] = kernel_to_json(m.kernel());
  j["noise_std"] = m.noise_std();
  j["x"] = matrix_to_json(m.train_x());
  j["y"] = vector_to_json(m.train_y());
  return j;
}

Json gp_to_json(const gp::CoKrigingModel& m) {
  Json j;
  j["format"] = kGpTag;
  j["model"] = "cokriging";
  j["lf_kernel"] = kernel_to_json(m.lf_kernel());
  j["residual_kernel"] = kernel_to_json(m.residual_kernel());
  j["rho"] = m.rho();
  j["noise_std_lf"] = m.noise_std_lf();
  j["noise_std_hf"] = m.noise_std_hf();
  j["x_lf"] = matrix_to_json(m.train_x_lf());
  j["y_lf"] = vector_to_json(m.train_y_lf());
  j["x_hf"] = matrix_to_json(m.train_x_hf());
  j["y_hf"] = vector_to_json(m.train_y_hf());
  return j;
}

gp::GprModel gpr_from_json(const Json& j) {
  return as_parse_error("gp model", [&] {
    expect_format(j, kGpTag);
    if (j.value("model", std::string{}) != "gpr")
      throw ParseError("expected a single-fidelity gp model");
    return gp::GprModel::fit(kernel_from_json(j.at("kernel")), matrix_from_json(j.at("x")),
                             vector_from_json(j.at("y")), j.at("noise_std").get<double>());
  });
}

gp::CoKrigingModel cokriging_from_json(const Json& j) {
  return as_parse_error("gp model", [&] {
    expect_format(j, kGpTag);
    if (j.value("model", std::string{}) != "cokriging")
      throw ParseError("expected a cokriging model");
    return gp::CoKrigingModel::fit(
        kernel_from_json(j.at("lf_kernel")), kernel_from_json(j.at("residual_kernel")),
        j.at("rho").get<double>(), matrix_from_json(j.at("x_lf")),
        vector_from_json(j.at("y_lf")), matrix_from_json(j.at("x_hf")),
        vector_from_json(j.at("y_hf")), j.at("noise_std_lf").get<double>(),
        j.at("noise_std_hf").get<double>());
  });
}

Json config_to_json(const hpo::Config& c) {
  Json j = Json::object();
  for (const auto& [key, value] : c) {
    if (const double* d = std::get_if<double>(&value))
      j[key] = *d;
    else if (const std::int64_t* i = std::get_if<std::int64_t>(&value))
      j[key] = *i;
    else
      j[key] = std::get<std::string>(value);
  }
  return j;
}

hpo::Config config_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("config: expected a JSON object");
  hpo::Config c;
  for (const auto& [key, value] : j.items()) {
    if (value.is_string())
      c[key] = value.get<std::string>();
    else if (value.is_number_integer() || value.is_number_unsigned())
      c[key] = value.get<std::int64_t>();
    else if (value.is_number_float())
      c[key] = value.get<double>();
    else
      throw ParseError("config: value of '" + key + "' must be a string or number");
  }
  return c;
}

std::string trials_to_jsonl(const std::vector<hpo::Trial>& trials) {
  std::string out;
  for (const hpo::Trial& t : trials) {
    Json j;
    j["format"] = kTrialsTag;
    j["config"] = config_to_json(t.config);
    if (t.ok)
      j["objective"] = t.objective;
    else
      j["objective"] = nullptr;
    j["ok"] = t.ok;
    j["seed"] = t.seed;
    j["wall_time_s"] = t.wall_time_s;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<hpo::Trial> trials_from_jsonl(const std::string& text,
                                          const std::string& context) {
  std::vector<hpo::Trial> trials;
  std::size_t start = 0;
  int line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const std::string where = context + ":" + std::to_string(line_no);
    const Json j = parse_json(line, where);
    as_parse_error("trial line", [&] {
      expect_format(j, kTrialsTag);
      hpo::Trial t;
      t.config = config_from_json(j.at("config"));
      t.ok = j.at("ok").get<bool>();
      t.objective = t.ok ? j.at("objective").get<double>()
                         : std::numeric_limits<double>::infinity();
      t.seed = j.at("seed").get<std::uint64_t>();
      t.wall_time_s = j.at("wall_time_s").get<double>();
      trials.push_back(std::move(t));
      return 0;
    });
  }
  return trials;
}

void save_trials(const std::string& path, const std::vector<hpo::Trial>& trials) {
  csv::write_text_atomic(path, trials_to_jsonl(trials));
}

std::vector<hpo::Trial> load_trials(const std::string& path) {
  return trials_from_jsonl(csv::read_text_file(path), path);
}

Json report_to_json(const bench::ExperimentResult& r) {
  Json j;
  j["format"] = kReportTag;
  j["case"] = static_cast<int>(r.case_id);
  Json settings;
  settings["seed"] = r.settings.seed;
  settings["budget"] = r.settings.budget;
  settings["n_test"] = r.settings.n_test;
  settings["case4_n_hf"] = r.settings.case4_n_hf;
  settings["case4_n_lf"] = r.settings.case4_n_lf;
  j["settings"] = settings;
  j["n_hf"] = r.n_hf;
  j["n_lf"] = r.n_lf;
  j["n_test"] = r.n_test;

  Json rows = Json::array();
  for (const bench::ReportRow& row : r.rows) {
    Json rj;
    rj["model"] = bench::display_name(row.model);
    rj["ok"] = row.ok;
    rj["error"] = row.ok ? Json{} : Json(row.error);
    rj["validation_mse_scaled"] =
        row.validation_mse_scaled ? Json(*row.validation_mse_scaled) : Json{};
    if (row.ok) {
      rj["test_mse"] = row.test.mse;
      rj["r2"] = row.test.r2 ? Json(*row.test.r2) : Json{};
      rj["n_test"] = row.test.n_test;
    } else {
      rj["test_mse"] = nullptr;
      rj["r2"] = nullptr;
      rj["n_test"] = 0;
    }
    rj["elapsed_seconds"] = row.test.elapsed_seconds;
    rj["config"] = config_to_json(row.config);
    rows.push_back(rj);
  }
  j["rows"] = rows;
  return j;
}

}  // namespace mufide::serialize
