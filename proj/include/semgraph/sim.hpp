#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "semgraph/pipeline.hpp"

namespace semgraph {

struct SimObject {
  std::string name;  // unique; defaults to the label
  std::string label;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // map frame
  double radius = 0.1;
  /// First frame index at which the object no longer exists.
  std::optional<std::size_t> removed_at;
};

struct SimRelation {
  std::string subject;  // labels
  std::string object;
  std::string predicate;
  double probability = 0.9;
};

struct NoiseSpec {
  /// Camera-frame (x right, y down, z forward) per-frame centroid jitter, metres.
  /// x/y shift the rendered sphere, z offsets its depth only.
  Eigen::Vector3d centroid_jitter_std = Eigen::Vector3d::Zero();
  double depth_noise_std = 0.0;  // per pixel, metres
  double mask_dropout = 0.0;     // erode/dilate probability per boundary pixel
  double false_negative_rate = 0.0;
  double false_positive_rate = 0.0;
  double relation_jitter = 0.0;  // std of the probability perturbation
};

enum class DepthModel { Surface, Center };

struct SceneSpec {
  nlohmann::json rooms;  // room file document
  Intrinsics intrinsics{525.0, 525.0, 319.5, 239.5, 640, 480};
  std::vector<SimObject> objects;
  std::vector<Pose> trajectory;  // camera-in-map, one per frame
  NoiseSpec noise;
  std::vector<SimRelation> relations;
  DepthModel depth_model = DepthModel::Surface;

  /// Throws InvalidConfig.
  void validate() const;
};

SceneSpec scene_spec_from_json(const nlohmann::json& j);
nlohmann::json scene_spec_to_json(const SceneSpec& spec);
SceneSpec load_scene_spec(const std::filesystem::path& path);

/// Camera-in-map pose at `eye` looking at `target`; `up` should not be
/// parallel to the viewing direction.
Pose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
             const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ());

/// True if the object exists at `frame_idx`, its centre is in front of the
/// camera (and outside the sphere), and the centre projects inside the image.
bool object_visible(const SceneSpec& spec, std::size_t object_idx, std::size_t frame_idx);

/// Renders one frame. frame_id = frame_idx. Throws IndexOutOfRange.
FrameInput render_frame(const SceneSpec& spec, std::size_t frame_idx, Rng& rng);
/// Same, with the per-frame stream mix_seed(seed, frame_idx).
FrameInput render_frame(const SceneSpec& spec, std::size_t frame_idx, std::uint64_t seed);

struct TruthEntry {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  bool visible = false;
};

struct GroundTruth {
  /// frame_id -> object name -> state; only objects that exist at that frame.
  std::map<std::int64_t, std::map<std::string, TruthEntry>> frames;
  std::map<std::string, std::string> labels;
};

GroundTruth ground_truth(const SceneSpec& spec);
nlohmann::json truth_to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const nlohmann::json& j);

/// Writes frames.jsonl, depth/NNNNNN.pgm, truth.json and rooms.json into
/// `out_dir` (created if missing). Byte-identical for identical inputs.
void generate_log(const SceneSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir);

struct ObjectEstimate {
  ObjectId id = 0;
  std::string label;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

/// frame_id -> every map object after that frame.
using FrameEstimates = std::map<std::int64_t, std::vector<ObjectEstimate>>;

struct EvalReport {
  Eigen::Vector3d mean_position = Eigen::Vector3d::Zero();
  Eigen::Vector3d mae = Eigen::Vector3d::Zero();
  Eigen::Vector3d error_std = Eigen::Vector3d::Zero();
  std::size_t samples = 0;
  std::size_t duplicates = 0;
  std::size_t missed = 0;
};

/// Per frame, truth objects seen at least once so far are matched greedily to
/// map objects of the same label, nearest first (ties: lower id). Every match
/// is one sample. Identity counts are taken at the last truth frame.
/// Throws NoSamples.
EvalReport evaluate(const FrameEstimates& estimates, const GroundTruth& truth);

nlohmann::json eval_report_to_json(const EvalReport& r);

}  // namespace semgraph
