#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "mufide/bench.hpp"
#include "mufide/gp.hpp"
#include "mufide/hpo.hpp"
#include "mufide/mfnn.hpp"
#include "mufide/nn.hpp"

namespace mufide::serialize {

using Json = nlohmann::json;

// Parse errors and malformed documents surface as ParseError; the reading
// side validates the format tag and the structural invariants of whatever it
// reconstructs.
Json parse_json(const std::string& text, const std::string& context);
Json load_json(const std::string& path);
void save_json(const std::string& path, const Json& j);

// "mufide-net-v1": architecture plus flat row-major parameter arrays.
Json network_to_json(const nn::Network& net);
nn::Network network_from_json(const Json& j);

// "mufide-model-v1": variant tag, component networks, the active training
// configuration and the three scalers.
Json model_to_json(const mfnn::MfModel& m);
mfnn::MfModel model_from_json(const Json& j);
void save_model(const std::string& path, const mfnn::MfModel& m);
mfnn::MfModel load_model(const std::string& path);

// "mufide-gp-v1": kernel parameters, rho, noise and the training data
// inline. Loading refits the posterior from the stored data, which is a
// deterministic Cholesky solve (no likelihood search).
Json gp_to_json(const gp::GprModel& m);
Json gp_to_json(const gp::CoKrigingModel& m);
gp::GprModel gpr_from_json(const Json& j);
gp::CoKrigingModel cokriging_from_json(const Json& j);

// Hyperparameter configurations as plain JSON objects (string, integer or
// float values), the on-disk form consumed by the train command.
Json config_to_json(const hpo::Config& c);
hpo::Config config_from_json(const Json& j);

// "mufide-trials-v1": JSON lines, one self-tagged object per trial; a failed
// trial's objective is null.
std::string trials_to_jsonl(const std::vector<hpo::Trial>& trials);
std::vector<hpo::Trial> trials_from_jsonl(const std::string& text, const std::string& context);
void save_trials(const std::string& path, const std::vector<hpo::Trial>& trials);
std::vector<hpo::Trial> load_trials(const std::string& path);

// "mufide-report-v1": experiment metadata plus one object per model row.
// Prediction grids are emitted separately as CSV.
Json report_to_json(const bench::ExperimentResult& r);

}  // namespace mufide::serialize
