#pragma once

#include <filesystem>

#include <json.hpp>

#include "semgraph/pipeline.hpp"

namespace semgraph {

/// Applies a flat dotted-key config object, e.g.
/// {"lambda_iou":0.4,"filter.n_particles":200,"filter.sigma0":[0.3,0.2,0.03]}.
/// Unknown keys and wrong types throw InvalidConfig. The result is validated.
void apply_config(PipelineConfig& cfg, const nlohmann::json& flat);
PipelineConfig load_config(const std::filesystem::path& path);

/// Inverse of apply_config; every key is present.
nlohmann::json config_to_json(const PipelineConfig& cfg);

}  // namespace semgraph
