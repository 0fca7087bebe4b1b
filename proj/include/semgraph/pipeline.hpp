#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semgraph/filter.hpp"
#include "semgraph/graph.hpp"
#include "semgraph/mask.hpp"

namespace semgraph {

struct Detection {
  std::string label;
  double score = 1.0;
  Mask mask;
};

struct RelationDetection {
  std::size_t subject = 0;  // index into FrameInput::detections
  std::size_t object = 0;
  std::string predicate;
  double probability = 0.0;
};

/// One perception record: camera-in-map pose, depth and the detector output.
struct FrameInput {
  std::int64_t frame_id = 0;
  Pose camera_pose;
  Intrinsics intrinsics;
  DepthImage depth;
  std::vector<Detection> detections;
  std::vector<RelationDetection> relations;
};

struct PipelineConfig {
  double lambda_iou = 0.3;
  double rel_threshold = 0.5;
  double max_distance = 3.5;
  int max_misses = 5;
  bool require_label_match = true;
  double min_score = 0.0;
  /// false feeds raw centroids straight into the map (no particle filter).
  bool use_filter = true;
  CentroidMode centroid_mode = CentroidMode::Mean;
  std::uint64_t seed = 0;
  FilterConfig filter;

  void validate() const;
};

/// Per-object tracking state kept next to the map node.
struct TrackedObject {
  ObjectId id = 0;
  std::string label;
  ParticleSet particles;
  Mask last_mask;
  /// Depth (mm) under each foreground pixel of last_mask, in pixel order.
  std::vector<std::uint16_t> last_depth;
  Pose last_pose;
  std::int64_t last_frame = 0;
  int misses = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // map frame
  Rng rng;
};

using TrackTable = std::map<ObjectId, TrackedObject>;

struct GatedDetection {
  std::size_t index = 0;
  Point3 centroid;  // map frame
  double distance = 0.0;
};

struct GateResult {
  std::vector<GatedDetection> kept;
  std::size_t dropped_far = 0;
  std::size_t dropped_no_depth = 0;
  std::size_t dropped_low_score = 0;
};

/// Centroid per detection; keeps those within max_distance of the camera.
GateResult distance_filter(std::span<const Detection> detections, const DepthImage& depth,
                           const Intrinsics& k, const Pose& camera_pose,
                           const PipelineConfig& cfg);

struct Match {
  ObjectId track = 0;
  std::size_t detection = 0;
  double iou = 0.0;
};

struct Association {
  std::vector<Match> matches;
  std::vector<std::size_t> unmatched_detections;
  std::vector<ObjectId> unmatched_tracks;
};

/// Reprojects each track's last mask into the current view and greedily
/// pairs tracks with detections in descending IoU order. Only pairs with
/// IoU > lambda_iou (and equal labels, if required) are accepted. Ties go to
/// the lower object id, then the lower detection index.
Association associate(const TrackTable& tracks, std::span<const Detection> detections,
                      std::span<const std::size_t> candidates, const Intrinsics& k,
                      const Pose& camera_pose, const PipelineConfig& cfg);

/// Removes tracks that have missed at least max_misses frames while their
/// estimate is in view (in front of the camera, inside the image and within
/// max_distance). Returns the removed ids, ascending.
std::vector<ObjectId> stale_sweep(SemanticMap& map, TrackTable& tracks, const Pose& camera_pose,
                                  const Intrinsics& k, const PipelineConfig& cfg);

struct SceneObject {
  ObjectId id = 0;
  std::size_t detection = 0;
  std::string label;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();     // map estimate after update
  Eigen::Vector3d observation = Eigen::Vector3d::Zero();  // raw centroid
  double iou = 0.0;  // association score; 0 for new objects
  bool created = false;
};

struct SceneRelation {
  ObjectId source = 0;
  ObjectId target = 0;
  std::string predicate;
  double probability = 0.0;
};

/// What one frame contributed: gated detections resolved to map ids.
struct SceneGraph {
  std::int64_t frame_id = 0;
  std::uint64_t revision = 0;
  std::vector<SceneObject> objects;
  std::vector<SceneRelation> relations;
  std::vector<ObjectId> removed;
  std::size_t dropped_far = 0;
  std::size_t dropped_no_depth = 0;
  std::size_t dropped_low_score = 0;
  std::size_t rejected_relations = 0;
};

/// Owns the semantic map and the per-object trackers; frames are processed
/// strictly in order.
class Pipeline {
 public:
  Pipeline(SemanticMap map, PipelineConfig cfg);

  /// Throws NonMonotonicFrame, DimensionMismatch or InvalidInput; on error the
  /// map and trackers are left untouched.
  SceneGraph process_frame(const FrameInput& frame);

  const SemanticMap& map() const { return map_; }
  const TrackTable& tracks() const { return tracks_; }
  const PipelineConfig& config() const { return cfg_; }
  std::shared_ptr<const SemanticMap> snapshot() const { return map_.snapshot(); }

 private:
  void validate_frame(const FrameInput& frame) const;
  void update_track(TrackedObject& track, const Detection& det, const GatedDetection& obs,
                    const FrameInput& frame);
  TrackedObject new_track(ObjectId id, const Detection& det, const GatedDetection& obs,
                          const FrameInput& frame);

  SemanticMap map_;
  PipelineConfig cfg_;
  TrackTable tracks_;
  std::optional<std::int64_t> last_frame_id_;
};

}  // namespace semgraph
