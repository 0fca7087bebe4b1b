#include "semgraph/pipeline.hpp"

#include <algorithm>
#include <string>
#include <tuple>

#include "semgraph/random.hpp"

namespace semgraph {

void PipelineConfig::validate() const {
  auto unit = [](double v) { return v > 0.0 && v <= 1.0; };
  if (!unit(lambda_iou)) throw Error(ErrorCode::InvalidConfig, "lambda_iou must lie in (0, 1]");
  if (!unit(rel_threshold)) {
    throw Error(ErrorCode::InvalidConfig, "rel_threshold must lie in (0, 1]");
  }
  if (!(max_distance > 0.0)) throw Error(ErrorCode::InvalidConfig, "max_distance must be > 0");
  if (max_misses < 1) throw Error(ErrorCode::InvalidConfig, "max_misses must be >= 1");
  if (!(min_score >= 0.0 && min_score <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "min_score must lie in [0, 1]");
  }
  filter.validate();
}

GateResult distance_filter(std::span<const Detection> detections, const DepthImage& depth,
                           const Intrinsics& k, const Pose& camera_pose,
                           const PipelineConfig& cfg) {
  GateResult out;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Detection& det = detections[i];
    if (det.score < cfg.min_score) {
      ++out.dropped_low_score;
      continue;
    }
    Point3 c;
    try {
      c = centroid3d(det.mask, depth, k, camera_pose, cfg.centroid_mode);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoValidDepth && e.code() != ErrorCode::EmptyMask) throw;
      ++out.dropped_no_depth;
      continue;
    }
    const double dist = (c.p - camera_pose.translation()).norm();
    if (dist <= cfg.max_distance) {
      out.kept.push_back({i, c, dist});
    } else {
      ++out.dropped_far;
    }
  }
  return out;
}

Association associate(const TrackTable& tracks, std::span<const Detection> detections,
                      std::span<const std::size_t> candidates, const Intrinsics& k,
                      const Pose& camera_pose, const PipelineConfig& cfg) {
  struct Pair {
    double iou;
    ObjectId track;
    std::size_t det;
  };
  std::vector<Pair> pairs;
  for (const auto& [id, track] : tracks) {
    bool any_label = false;
    for (std::size_t d : candidates) {
      if (!cfg.require_label_match || detections[d].label == track.label) any_label = true;
    }
    if (!any_label) continue;
    const Mask moved = reproject_mask(track.last_mask, track.last_depth, k,
                                      camera_motion(track.last_pose, camera_pose));
    for (std::size_t d : candidates) {
      const Detection& det = detections[d];
      if (cfg.require_label_match && det.label != track.label) continue;
      const double v = iou(moved, det.mask);
      if (v > cfg.lambda_iou) pairs.push_back({v, id, d});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(b.iou, a.track, a.det) < std::tie(a.iou, b.track, b.det);
  });

  Association out;
  std::set<ObjectId> used_tracks;
  std::set<std::size_t> used_dets;
  for (const Pair& p : pairs) {
    if (used_tracks.contains(p.track) || used_dets.contains(p.det)) continue;
    used_tracks.insert(p.track);
    used_dets.insert(p.det);
    out.matches.push_back({p.track, p.det, p.iou});
  }
  std::sort(out.matches.begin(), out.matches.end(),
            [](const Match& a, const Match& b) { return a.track < b.track; });
  for (std::size_t d : candidates) {
    if (!used_dets.contains(d)) out.unmatched_detections.push_back(d);
  }
  std::sort(out.unmatched_detections.begin(), out.unmatched_detections.end());
  for (const auto& [id, track] : tracks) {
    if (!used_tracks.contains(id)) out.unmatched_tracks.push_back(id);
  }
  return out;
}

std::vector<ObjectId> stale_sweep(SemanticMap& map, TrackTable& tracks, const Pose& camera_pose,
                                  const Intrinsics& k, const PipelineConfig& cfg) {
  std::vector<ObjectId> removed;
  for (const auto& [id, track] : tracks) {
    if (track.misses < cfg.max_misses) continue;
    const Point3 cam = map_to_camera({track.position, Frame::Map}, camera_pose);
    if (!(cam.z() > 0)) continue;
    if (cam.p.norm() > cfg.max_distance) continue;
    const PixelCoord uv = project(cam, k);
    if (!k.contains_pixel(uv.u, uv.v)) continue;
    removed.push_back(id);
  }
  for (ObjectId id : removed) {
    map.remove_object(id);
    tracks.erase(id);
  }
  return removed;
}

Pipeline::Pipeline(SemanticMap map, PipelineConfig cfg) : map_(std::move(map)), cfg_(cfg) {
  cfg_.validate();
  if (map_.rooms().empty()) throw Error(ErrorCode::NoRooms, "pipeline needs at least one room");
}

void Pipeline::validate_frame(const FrameInput& frame) const {
  if (last_frame_id_ && frame.frame_id <= *last_frame_id_) {
    throw Error(ErrorCode::NonMonotonicFrame,
                "frame " + std::to_string(frame.frame_id) + " after " +
                    std::to_string(*last_frame_id_));
  }
  const Intrinsics& k = frame.intrinsics;
  k.validate();
  if (frame.depth.width != k.width || frame.depth.height != k.height ||
      frame.depth.mm.size() != static_cast<std::size_t>(k.width) * k.height) {
    throw Error(ErrorCode::DimensionMismatch, "depth image does not match the intrinsics");
  }
  for (const auto& det : frame.detections) {
    if (det.mask.width() != k.width || det.mask.height() != k.height) {
      throw Error(ErrorCode::DimensionMismatch, "detection mask does not match the intrinsics");
    }
    if (!(det.score >= 0.0 && det.score <= 1.0)) {
      throw Error(ErrorCode::InvalidInput, "detection score outside [0, 1]");
    }
    if (det.mask.is_empty()) throw Error(ErrorCode::InvalidInput, "detection with empty mask");
  }
  for (const auto& rel : frame.relations) {
    if (rel.subject >= frame.detections.size() || rel.object >= frame.detections.size()) {
      throw Error(ErrorCode::InvalidInput, "relation index out of range");
    }
    if (rel.subject == rel.object) {
      throw Error(ErrorCode::InvalidInput, "relation subject equals object");
    }
    if (!(rel.probability >= 0.0 && rel.probability <= 1.0)) {
      throw Error(ErrorCode::InvalidInput, "relation probability outside [0, 1]");
    }
  }
  if (!tracks_.empty()) {
    const Mask& m = tracks_.begin()->second.last_mask;
    if (m.width() != k.width || m.height() != k.height) {
      throw Error(ErrorCode::DimensionMismatch, "image size changed mid-stream");
    }
  }
}

TrackedObject Pipeline::new_track(ObjectId id, const Detection& det, const GatedDetection& obs,
                                  const FrameInput& frame) {
  TrackedObject t;
  t.id = id;
  t.label = det.label;
  t.rng.seed(mix_seed(cfg_.seed, id));
  if (cfg_.use_filter) {
    const Point3 mu0 = cfg_.filter.prediction_frame == Frame::Map
                           ? obs.centroid
                           : map_to_camera(obs.centroid, frame.camera_pose);
    t.particles = init_particles(mu0, cfg_.filter, t.rng);
  }
  t.last_mask = det.mask;
  t.last_depth = sample_depth(det.mask, frame.depth);
  t.last_pose = frame.camera_pose;
  t.last_frame = frame.frame_id;
  t.position = obs.centroid.p;
  return t;
}

void Pipeline::update_track(TrackedObject& track, const Detection& det, const GatedDetection& obs,
                            const FrameInput& frame) {
  if (cfg_.use_filter) {
    const FilterConfig& fc = cfg_.filter;
    if (fc.prediction_frame == Frame::Map) {
      track.particles = predict(track.particles, Pose::identity(), fc, track.rng);
      track.particles = update_weights(track.particles, obs.centroid);
      track.position = estimate(track.particles).p;
    } else {
      const Pose motion = camera_motion(track.last_pose, frame.camera_pose);
      track.particles = predict(track.particles, motion, fc, track.rng);
      track.particles =
          update_weights(track.particles, map_to_camera(obs.centroid, frame.camera_pose));
      track.position = camera_to_map(estimate(track.particles), frame.camera_pose).p;
    }
    track.particles = maybe_resample(track.particles, fc, track.rng);
  } else {
    track.position = obs.centroid.p;
  }
  track.last_mask = det.mask;
  track.last_depth = sample_depth(det.mask, frame.depth);
  track.last_pose = frame.camera_pose;
  track.last_frame = frame.frame_id;
  track.misses = 0;
}

SceneGraph Pipeline::process_frame(const FrameInput& frame) {
  validate_frame(frame);

  SceneGraph scene;
  scene.frame_id = frame.frame_id;
  {
    SemanticMap::Batch batch(map_);

    const GateResult gate =
        distance_filter(frame.detections, frame.depth, frame.intrinsics, frame.camera_pose, cfg_);
    scene.dropped_far = gate.dropped_far;
    scene.dropped_no_depth = gate.dropped_no_depth;
    scene.dropped_low_score = gate.dropped_low_score;

    std::map<std::size_t, const GatedDetection*> by_index;
    std::vector<std::size_t> candidates;
    for (const auto& g : gate.kept) {
      by_index[g.index] = &g;
      candidates.push_back(g.index);
    }

    const Association assoc = associate(tracks_, frame.detections, candidates, frame.intrinsics,
                                        frame.camera_pose, cfg_);

    std::map<std::size_t, ObjectId> resolved;
    for (const Match& m : assoc.matches) {
      TrackedObject& track = tracks_.at(m.track);
      const Detection& det = frame.detections[m.detection];
      const GatedDetection& obs = *by_index.at(m.detection);
      update_track(track, det, obs, frame);
      map_.update_object(track.id, track.position, frame.frame_id);
      map_.set_misses(track.id, 0);
      resolved[m.detection] = track.id;
      scene.objects.push_back(
          {track.id, m.detection, det.label, track.position, obs.centroid.p, m.iou, false});
    }

    for (std::size_t d : assoc.unmatched_detections) {
      const Detection& det = frame.detections[d];
      const GatedDetection& obs = *by_index.at(d);
      const ObjectId id = map_.upsert_object(det.label, obs.centroid.p, frame.frame_id);
      tracks_.emplace(id, new_track(id, det, obs, frame));
      resolved[d] = id;
      scene.objects.push_back({id, d, det.label, obs.centroid.p, obs.centroid.p, 0.0, true});
    }

    for (ObjectId id : assoc.unmatched_tracks) {
      TrackedObject& track = tracks_.at(id);
      ++track.misses;
      map_.set_misses(id, track.misses);
    }

    scene.removed = stale_sweep(map_, tracks_, frame.camera_pose, frame.intrinsics, cfg_);

    for (const auto& rel : frame.relations) {
      auto s = resolved.find(rel.subject);
      auto o = resolved.find(rel.object);
      if (s == resolved.end() || o == resolved.end()) continue;
      const RelationOutcome outcome = map_.upsert_relation(
          s->second, o->second, rel.predicate, rel.probability, frame.frame_id, cfg_.rel_threshold);
      if (outcome == RelationOutcome::Rejected) {
        ++scene.rejected_relations;
      } else {
        scene.relations.push_back({s->second, o->second, rel.predicate, rel.probability});
      }
    }
  }
  last_frame_id_ = frame.frame_id;
  scene.revision = map_.revision();
  return scene;
}

}  // namespace semgraph
