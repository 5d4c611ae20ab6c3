#pragma once

#include <string>

#include "json.hpp"
#include "ykmpc/harness.hpp"

namespace ykmpc {

using json = nlohmann::json;

// Row-major nested arrays. Malformed input raises ConfigError.
json to_json(const Mat& m);
Mat matrix_from_json(const json& j);
// Scalar -> s I, vector -> diagonal, nested array -> matrix.
Mat weight_from_json(const json& j, Index n);

json to_json(const StateSpace& g);
StateSpace state_space_from_json(const json& j);

json to_json(const CoprimeFactors& f);
json to_json(const YkBlocks& b);
json to_json(const FirQ& q);
json to_json(const MpcGains& k);

json to_json(const FourTankParams& p);
FourTankParams params_from_json(const json& j);

// Event channels are one-based in JSON.
json to_json(const Scenario& s);
Scenario scenario_from_json(const json& j);

json to_json(const Config& c);
// Missing keys keep their defaults.
Config config_from_json(const json& j);
Config load_config(const std::string& path);

json to_json(const Metrics& m);

}  // namespace ykmpc
