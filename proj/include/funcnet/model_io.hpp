#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "funcnet/flm.hpp"
#include "funcnet/fnn.hpp"

namespace funcnet {

nlohmann::json basis_to_json(const BasisSystem& basis);
BasisSystem basis_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const NetworkConfig& config);
NetworkConfig config_from_json(const nlohmann::json& j);

/// Versioned model document; load rejects unknown formats and versions.
void save_fnn(const FnnModel& model, const std::string& path,
              const std::vector<std::string>& label_names = {});
void save_flm(const FlmModel& model, const std::string& path,
              const std::vector<std::string>& label_names = {});

struct LoadedModel {
  std::string kind;  // "fnn" or "flm"
  std::optional<FnnModel> fnn;
  std::optional<FlmModel> flm;
  std::vector<std::string> label_names;
};

LoadedModel load_model(const std::string& path);

}  // namespace funcnet
