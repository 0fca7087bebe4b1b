#include "semgraph/config.hpp"

#include <functional>
#include <map>
#include <string>

#include "semgraph/io.hpp"

namespace semgraph {

namespace {

using Setter = std::function<void(PipelineConfig&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"lambda_iou", [](PipelineConfig& c, const json& v) { c.lambda_iou = v.get<double>(); }},
      {"rel_threshold",
       [](PipelineConfig& c, const json& v) { c.rel_threshold = v.get<double>(); }},
      {"max_distance", [](PipelineConfig& c, const json& v) { c.max_distance = v.get<double>(); }},
      {"max_misses", [](PipelineConfig& c, const json& v) { c.max_misses = v.get<int>(); }},
      {"require_label_match",
       [](PipelineConfig& c, const json& v) { c.require_label_match = v.get<bool>(); }},
      {"min_score", [](PipelineConfig& c, const json& v) { c.min_score = v.get<double>(); }},
      {"use_filter", [](PipelineConfig& c, const json& v) { c.use_filter = v.get<bool>(); }},
      {"seed", [](PipelineConfig& c, const json& v) { c.seed = v.get<std::uint64_t>(); }},
      {"centroid_mode",
       [](PipelineConfig& c, const json& v) {
         const auto s = v.get<std::string>();
         if (s == "mean") {
           c.centroid_mode = CentroidMode::Mean;
         } else if (s == "median") {
           c.centroid_mode = CentroidMode::Median;
         } else {
           throw Error(ErrorCode::InvalidConfig, "centroid_mode must be mean or median");
         }
       }},
      {"filter.n_particles",
       [](PipelineConfig& c, const json& v) { c.filter.n_particles = v.get<int>(); }},
      {"filter.sigma0",
       [](PipelineConfig& c, const json& v) {
         if (v.is_number()) {
           c.filter.sigma0 = Eigen::Vector3d::Constant(v.get<double>());
         } else if (v.is_array() && v.size() == 3) {
           c.filter.sigma0 = {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
         } else {
           throw Error(ErrorCode::InvalidConfig, "filter.sigma0 must be a number or [x,y,z]");
         }
       }},
      {"filter.prediction_frame",
       [](PipelineConfig& c, const json& v) {
         const auto s = v.get<std::string>();
         if (s == "map") {
           c.filter.prediction_frame = Frame::Map;
         } else if (s == "camera") {
           c.filter.prediction_frame = Frame::Camera;
         } else {
           throw Error(ErrorCode::InvalidConfig, "filter.prediction_frame must be map or camera");
         }
       }},
      {"filter.resample_ess_fraction",
       [](PipelineConfig& c, const json& v) {
         c.filter.resample_ess_fraction = v.get<double>();
       }},
  };
  return table;
}

}  // namespace

void apply_config(PipelineConfig& cfg, const json& flat) {
  if (!flat.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  for (const auto& [key, value] : flat.items()) {
    auto it = setters().find(key);
    if (it == setters().end()) throw Error(ErrorCode::InvalidConfig, "unknown config key " + key);
    try {
      it->second(cfg, value);
    } catch (const json::exception&) {
      throw Error(ErrorCode::InvalidConfig, "config key " + key + " has the wrong type");
    }
  }
  cfg.validate();
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  PipelineConfig cfg;
  apply_config(cfg, j);
  return cfg;
}

json config_to_json(const PipelineConfig& c) {
  const auto& s = c.filter.sigma0;
  return {{"lambda_iou", c.lambda_iou},
          {"rel_threshold", c.rel_threshold},
          {"max_distance", c.max_distance},
          {"max_misses", c.max_misses},
          {"require_label_match", c.require_label_match},
          {"min_score", c.min_score},
          {"use_filter", c.use_filter},
          {"seed", c.seed},
          {"centroid_mode", c.centroid_mode == CentroidMode::Mean ? "mean" : "median"},
          {"filter.n_particles", c.filter.n_particles},
          {"filter.sigma0", json::array({s.x(), s.y(), s.z()})},
          {"filter.prediction_frame", c.filter.prediction_frame == Frame::Map ? "map" : "camera"},
          {"filter.resample_ess_fraction", c.filter.resample_ess_fraction}};
}

}  // namespace semgraph
