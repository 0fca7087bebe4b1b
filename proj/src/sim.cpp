#include "semgraph/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <fmt/format.h>

#include "semgraph/io.hpp"
#include "semgraph/random.hpp"

namespace semgraph {

namespace {

Eigen::Vector3d vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::InvalidConfig, std::string(what) + " must be a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

bool exists_at(const SimObject& o, std::size_t frame_idx) {
  return !o.removed_at || frame_idx < *o.removed_at;
}

bool unit_interval(double v) { return v >= 0.0 && v <= 1.0; }

// Depth along the optical axis of the first intersection of the pixel ray
// with the sphere, or NaN.
double ray_sphere_depth(double x, double y, const Eigen::Vector3d& c, double r) {
  const Eigen::Vector3d d(x, y, 1.0);
  const double a = d.squaredNorm();
  const double b = d.dot(c);
  const double disc = b * b - a * (c.squaredNorm() - r * r);
  if (disc < 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double z = (b - std::sqrt(disc)) / a;
  return z > 0.0 ? z : std::numeric_limits<double>::quiet_NaN();
}

struct Box {
  int u0, u1, v0, v1;  // inclusive
};

// Pixel bounds of a camera-frame sphere from its bounding cube.
Box sphere_bounds(const Eigen::Vector3d& c, double r, const Intrinsics& k) {
  Box full{0, k.width - 1, 0, k.height - 1};
  if (c.z() - r <= 1e-6) return full;
  double umin = std::numeric_limits<double>::infinity();
  double umax = -umin;
  double vmin = umin;
  double vmax = -umin;
  for (int i = 0; i < 8; ++i) {
    const Eigen::Vector3d p = c + r * Eigen::Vector3d(i & 1 ? 1 : -1, i & 2 ? 1 : -1, i & 4 ? 1 : -1);
    const double u = k.fx * p.x() / p.z() + k.cx;
    const double v = k.fy * p.y() / p.z() + k.cy;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  Box b;
  b.u0 = std::max(0, static_cast<int>(std::floor(umin)) - 1);
  b.u1 = std::min(k.width - 1, static_cast<int>(std::ceil(umax)) + 1);
  b.v0 = std::max(0, static_cast<int>(std::floor(vmin)) - 1);
  b.v1 = std::min(k.height - 1, static_cast<int>(std::ceil(vmax)) + 1);
  return b;
}

}  // namespace

void SceneSpec::validate() const {
  intrinsics.validate();
  if (trajectory.empty()) throw Error(ErrorCode::InvalidConfig, "trajectory is empty");
  std::set<std::string> names;
  for (const auto& o : objects) {
    if (!(o.radius > 0.0) || !std::isfinite(o.radius)) {
      throw Error(ErrorCode::InvalidConfig, "object " + o.name + ": radius must be > 0");
    }
    if (!o.position.allFinite()) {
      throw Error(ErrorCode::InvalidConfig, "object " + o.name + ": non-finite position");
    }
    if (o.label.empty()) throw Error(ErrorCode::InvalidConfig, "object without label");
    if (!names.insert(o.name).second) {
      throw Error(ErrorCode::InvalidConfig, "duplicate object name " + o.name);
    }
  }
  const NoiseSpec& n = noise;
  if (!(n.centroid_jitter_std.array() >= 0.0).all() || !(n.depth_noise_std >= 0.0) ||
      !(n.relation_jitter >= 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "noise standard deviations must be >= 0");
  }
  if (!unit_interval(n.mask_dropout) || !unit_interval(n.false_negative_rate) ||
      !unit_interval(n.false_positive_rate)) {
    throw Error(ErrorCode::InvalidConfig, "noise rates must lie in [0, 1]");
  }
  for (const auto& r : relations) {
    if (!unit_interval(r.probability)) {
      throw Error(ErrorCode::InvalidConfig, "relation probability must lie in [0, 1]");
    }
  }
}

Pose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, const Eigen::Vector3d& up) {
  const Eigen::Vector3d dir = target - eye;
  const Eigen::Vector3d side = dir.cross(up);
  if (!(side.norm() > 1e-9 * dir.norm() * up.norm())) {
    throw Error(ErrorCode::InvalidPose, "look_at: degenerate viewing direction");
  }
  const Eigen::Vector3d z = dir.normalized();
  const Eigen::Vector3d x = side.normalized();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return {eye, Eigen::Quaterniond(r)};
}

SceneSpec scene_spec_from_json(const json& j) {
  SceneSpec s;
  try {
    s.rooms = j.at("rooms");
    if (j.contains("intrinsics")) s.intrinsics = intrinsics_from_json(j["intrinsics"]);
    for (const auto& o : j.value("objects", json::array())) {
      SimObject obj;
      obj.label = o.at("label").get<std::string>();
      obj.name = o.value("name", obj.label);
      obj.position = vec3_from(o.at("position"), "object position");
      obj.radius = o.value("radius", 0.1);
      if (o.contains("removed_at")) obj.removed_at = o["removed_at"].get<std::size_t>();
      s.objects.push_back(std::move(obj));
    }
    const json& traj = j.at("trajectory");
    if (traj.is_array()) {
      for (const auto& p : traj) s.trajectory.push_back(pose_from_json(p));
    } else {
      // Linear sweep of eye and target, one look_at pose per frame.
      const int frames = traj.at("frames").get<int>();
      const Eigen::Vector3d e0 = vec3_from(traj.at("eye_from"), "eye_from");
      const Eigen::Vector3d e1 = vec3_from(traj.value("eye_to", traj["eye_from"]), "eye_to");
      const Eigen::Vector3d t0 = vec3_from(traj.at("target_from"), "target_from");
      const Eigen::Vector3d t1 =
          vec3_from(traj.value("target_to", traj["target_from"]), "target_to");
      for (int i = 0; i < frames; ++i) {
        const double a = frames > 1 ? static_cast<double>(i) / (frames - 1) : 0.0;
        s.trajectory.push_back(look_at(e0 + a * (e1 - e0), t0 + a * (t1 - t0)));
      }
    }
    if (j.contains("noise")) {
      const json& n = j["noise"];
      if (n.contains("centroid_jitter_std")) {
        s.noise.centroid_jitter_std = vec3_from(n["centroid_jitter_std"], "centroid_jitter_std");
      }
      s.noise.depth_noise_std = n.value("depth_noise_std", 0.0);
      s.noise.mask_dropout = n.value("mask_dropout", 0.0);
      s.noise.false_negative_rate = n.value("false_negative_rate", 0.0);
      s.noise.false_positive_rate = n.value("false_positive_rate", 0.0);
      s.noise.relation_jitter = n.value("relation_jitter", 0.0);
    }
    for (const auto& r : j.value("relations", json::array())) {
      s.relations.push_back({r.at("subject").get<std::string>(), r.at("object").get<std::string>(),
                             r.at("predicate").get<std::string>(), r.value("probability", 0.9)});
    }
    const std::string model = j.value("depth_model", "surface");
    if (model == "surface") {
      s.depth_model = DepthModel::Surface;
    } else if (model == "center") {
      s.depth_model = DepthModel::Center;
    } else {
      throw Error(ErrorCode::InvalidConfig, "depth_model must be surface or center");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("scene spec: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw;
    throw Error(ErrorCode::InvalidConfig, std::string("scene spec: ") + e.what());
  }
  s.validate();
  return s;
}

json scene_spec_to_json(const SceneSpec& spec) {
  json objects = json::array();
  for (const auto& o : spec.objects) {
    json jo = {{"name", o.name}, {"label", o.label}, {"position", vec3(o.position)},
               {"radius", o.radius}};
    if (o.removed_at) jo["removed_at"] = *o.removed_at;
    objects.push_back(std::move(jo));
  }
  json traj = json::array();
  for (const auto& p : spec.trajectory) traj.push_back(pose_to_json(p));
  json rels = json::array();
  for (const auto& r : spec.relations) {
    rels.push_back({{"subject", r.subject},
                    {"object", r.object},
                    {"predicate", r.predicate},
                    {"probability", r.probability}});
  }
  const NoiseSpec& n = spec.noise;
  return {{"rooms", spec.rooms},
          {"intrinsics", intrinsics_to_json(spec.intrinsics)},
          {"objects", std::move(objects)},
          {"trajectory", std::move(traj)},
          {"noise",
           {{"centroid_jitter_std", vec3(n.centroid_jitter_std)},
            {"depth_noise_std", n.depth_noise_std},
            {"mask_dropout", n.mask_dropout},
            {"false_negative_rate", n.false_negative_rate},
            {"false_positive_rate", n.false_positive_rate},
            {"relation_jitter", n.relation_jitter}}},
          {"relations", std::move(rels)},
          {"depth_model", spec.depth_model == DepthModel::Surface ? "surface" : "center"}};
}

SceneSpec load_scene_spec(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return scene_spec_from_json(j);
}

bool object_visible(const SceneSpec& spec, std::size_t object_idx, std::size_t frame_idx) {
  const SimObject& o = spec.objects.at(object_idx);
  if (!exists_at(o, frame_idx)) return false;
  const Point3 c = map_to_camera({o.position, Frame::Map}, spec.trajectory.at(frame_idx));
  if (!(c.z() > o.radius)) return false;
  const PixelCoord uv = project(c, spec.intrinsics);
  return spec.intrinsics.contains_pixel(uv.u, uv.v);
}

FrameInput render_frame(const SceneSpec& spec, std::size_t frame_idx, Rng& rng) {
  if (frame_idx >= spec.trajectory.size()) {
    throw Error(ErrorCode::IndexOutOfRange, fmt::format("frame {} outside trajectory of {}",
                                                        frame_idx, spec.trajectory.size()));
  }
  const Intrinsics& k = spec.intrinsics;
  const Pose& pose = spec.trajectory[frame_idx];
  const NoiseSpec& noise = spec.noise;
  const int w = k.width;
  const int h = k.height;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  FrameInput f;
  f.frame_id = static_cast<std::int64_t>(frame_idx);
  f.camera_pose = pose;
  f.intrinsics = k;
  f.depth = DepthImage(w, h);

  struct Shown {
    std::size_t object;
    Eigen::Vector3d centre;  // camera frame, laterally jittered
    double dz;
  };
  std::vector<Shown> shown;
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const SimObject& o = spec.objects[i];
    if (!exists_at(o, frame_idx)) continue;
    Eigen::Vector3d j;
    for (int a = 0; a < 3; ++a) j[a] = gauss(rng) * noise.centroid_jitter_std[a];
    if (!object_visible(spec, i, frame_idx)) continue;
    Eigen::Vector3d c = map_to_camera({o.position, Frame::Map}, pose).p;
    c.x() += j.x();
    c.y() += j.y();
    shown.push_back({i, c, j.z()});
  }

  // Visible surface per pixel.
  const std::size_t npx = static_cast<std::size_t>(w) * h;
  std::vector<double> zbuf(npx, std::numeric_limits<double>::infinity());
  std::vector<int> owner(npx, -1);
  std::vector<Box> boxes;
  for (std::size_t s = 0; s < shown.size(); ++s) {
    const double r = spec.objects[shown[s].object].radius;
    const Box b = sphere_bounds(shown[s].centre, r, k);
    boxes.push_back(b);
    for (int v = b.v0; v <= b.v1; ++v) {
      const double y = (v - k.cy) / k.fy;
      for (int u = b.u0; u <= b.u1; ++u) {
        const double z = ray_sphere_depth((u - k.cx) / k.fx, y, shown[s].centre, r);
        const std::size_t idx = static_cast<std::size_t>(v) * w + u;
        if (z < zbuf[idx]) {
          zbuf[idx] = z;
          owner[idx] = static_cast<int>(s);
        }
      }
    }
  }

  for (std::size_t idx = 0; idx < npx; ++idx) {
    if (owner[idx] < 0) continue;
    const Shown& s = shown[static_cast<std::size_t>(owner[idx])];
    double d = spec.depth_model == DepthModel::Surface ? zbuf[idx] : s.centre.z();
    d += s.dz;
    if (noise.depth_noise_std > 0.0) d += gauss(rng) * noise.depth_noise_std;
    const double mm = std::round(d * 1000.0);
    f.depth.mm[idx] = (mm > 0.0 && mm <= 65535.0) ? static_cast<std::uint16_t>(mm) : 0;
  }

  // Masks, with boundary pixels flipped in a two-pixel band.
  const int band = 2;
  std::vector<std::size_t> real_objects;
  for (std::size_t s = 0; s < shown.size(); ++s) {
    const int me = static_cast<int>(s);
    const Box& b = boxes[s];
    std::vector<std::uint32_t> pixels;
    for (int v = std::max(0, b.v0 - band); v <= std::min(h - 1, b.v1 + band); ++v) {
      for (int u = std::max(0, b.u0 - band); u <= std::min(w - 1, b.u1 + band); ++u) {
        const std::size_t idx = static_cast<std::size_t>(v) * w + u;
        const bool inside = owner[idx] == me;
        bool keep = inside;
        if (noise.mask_dropout > 0.0) {
          bool edge = false;
          for (int dv = -band; dv <= band && !edge; ++dv) {
            for (int du = -band; du <= band && !edge; ++du) {
              const int uu = u + du;
              const int vv = v + dv;
              const bool other =
                  uu < 0 || vv < 0 || uu >= w || vv >= h ||
                  owner[static_cast<std::size_t>(vv) * w + uu] != me;
              edge = inside ? other : !other;
            }
          }
          if (edge && unif(rng) < noise.mask_dropout) keep = !inside;
        }
        if (keep) pixels.push_back(static_cast<std::uint32_t>(idx));
      }
    }
    const bool dropped = unif(rng) < noise.false_negative_rate;
    const double score = 0.8 + 0.2 * unif(rng);
    if (dropped || pixels.empty()) continue;
    f.detections.push_back(
        {spec.objects[shown[s].object].label, score, Mask::from_sorted_indices(w, h, pixels)});
    real_objects.push_back(shown[s].object);
  }

  if (unif(rng) < noise.false_positive_rate) {
    const double cu = unif(rng) * w;
    const double cv = unif(rng) * h;
    const double rad = 10.0 + 15.0 * unif(rng);
    const double depth = 1.0 + 2.0 * unif(rng);
    const double score = 0.5 + 0.3 * unif(rng);
    std::vector<std::uint32_t> pixels;
    for (int v = std::max(0, static_cast<int>(cv - rad)); v <= std::min(h - 1, static_cast<int>(cv + rad)); ++v) {
      for (int u = std::max(0, static_cast<int>(cu - rad)); u <= std::min(w - 1, static_cast<int>(cu + rad)); ++u) {
        const std::size_t idx = static_cast<std::size_t>(v) * w + u;
        if ((u - cu) * (u - cu) + (v - cv) * (v - cv) > rad * rad) continue;
        if (owner[idx] >= 0 || f.depth.mm[idx] != 0) continue;
        f.depth.mm[idx] = static_cast<std::uint16_t>(std::round(depth * 1000.0));
        pixels.push_back(static_cast<std::uint32_t>(idx));
      }
    }
    if (!pixels.empty()) {
      f.detections.push_back({"clutter", score, Mask::from_sorted_indices(w, h, pixels)});
    }
  }

  for (const SimRelation& rel : spec.relations) {
    for (std::size_t a = 0; a < real_objects.size(); ++a) {
      for (std::size_t b = 0; b < real_objects.size(); ++b) {
        if (a == b) continue;
        if (spec.objects[real_objects[a]].label != rel.subject) continue;
        if (spec.objects[real_objects[b]].label != rel.object) continue;
        double p = rel.probability;
        if (noise.relation_jitter > 0.0) p += gauss(rng) * noise.relation_jitter;
        f.relations.push_back({a, b, rel.predicate, std::clamp(p, 0.0, 1.0)});
      }
    }
  }
  return f;
}

FrameInput render_frame(const SceneSpec& spec, std::size_t frame_idx, std::uint64_t seed) {
  Rng rng(mix_seed(seed, frame_idx));
  return render_frame(spec, frame_idx, rng);
}

GroundTruth ground_truth(const SceneSpec& spec) {
  GroundTruth t;
  for (const auto& o : spec.objects) t.labels[o.name] = o.label;
  for (std::size_t f = 0; f < spec.trajectory.size(); ++f) {
    auto& frame = t.frames[static_cast<std::int64_t>(f)];
    for (std::size_t i = 0; i < spec.objects.size(); ++i) {
      const SimObject& o = spec.objects[i];
      if (!exists_at(o, f)) continue;
      frame[o.name] = {o.position, object_visible(spec, i, f)};
    }
  }
  return t;
}

json truth_to_json(const GroundTruth& truth) {
  json frames = json::object();
  for (const auto& [fid, objs] : truth.frames) {
    json jf = json::object();
    for (const auto& [name, e] : objs) {
      jf[name] = {{"position", vec3(e.position)}, {"visible", e.visible}};
    }
    frames[std::to_string(fid)] = std::move(jf);
  }
  return {{"frames", std::move(frames)}, {"labels", truth.labels}};
}

GroundTruth truth_from_json(const json& j) {
  GroundTruth t;
  try {
    t.labels = j.at("labels").get<std::map<std::string, std::string>>();
    for (const auto& [fid, objs] : j.at("frames").items()) {
      auto& frame = t.frames[std::stoll(fid)];
      for (const auto& [name, e] : objs.items()) {
        if (!t.labels.contains(name)) {
          throw Error(ErrorCode::ParseError, "truth object " + name + " has no label");
        }
        frame[name] = {vec3_from(e.at("position"), "truth position"), e.value("visible", true)};
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("truth: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::ParseError, std::string("truth: bad frame id: ") + e.what());
  }
  return t;
}

void generate_log(const SceneSpec& spec, std::uint64_t seed, const std::filesystem::path& out_dir) {
  spec.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "depth", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + out_dir.string() + ": " + ec.message());
  std::string lines;
  for (std::size_t i = 0; i < spec.trajectory.size(); ++i) {
    const FrameInput f = render_frame(spec, i, seed);
    const std::string rel = fmt::format("depth/{:06d}.pgm", i);
    write_pgm16(out_dir / rel, f.depth);
    lines += frame_to_json(f, rel).dump() + "\n";
  }
  write_text_file(out_dir / "frames.jsonl", lines);
  write_text_file(out_dir / "truth.json", truth_to_json(ground_truth(spec)).dump(2) + "\n");
  write_text_file(out_dir / "rooms.json", spec.rooms.dump(2) + "\n");
}

EvalReport evaluate(const FrameEstimates& estimates, const GroundTruth& truth) {
  std::optional<std::int64_t> last;
  for (const auto& [fid, objs] : truth.frames) {
    if (estimates.contains(fid)) last = fid;
  }

  std::vector<Eigen::Vector3d> est;
  std::vector<Eigen::Vector3d> err;
  EvalReport r;
  std::set<std::string> seen;
  for (const auto& [fid, objs] : truth.frames) {
    for (const auto& [name, e] : objs) {
      if (e.visible) seen.insert(name);
    }
    auto it = estimates.find(fid);
    if (it == estimates.end()) continue;
    const std::vector<ObjectEstimate>& map_objs = it->second;

    struct Pair {
      double dist;
      ObjectId id;
      std::string name;
      std::size_t est;
    };
    std::vector<Pair> pairs;
    std::size_t candidates = 0;
    for (const auto& [name, e] : objs) {
      if (!seen.contains(name)) continue;
      ++candidates;
      const std::string& label = truth.labels.at(name);
      for (std::size_t m = 0; m < map_objs.size(); ++m) {
        if (map_objs[m].label != label) continue;
        pairs.push_back({(map_objs[m].position - e.position).norm(), map_objs[m].id, name, m});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
      return std::tie(a.dist, a.id, a.name) < std::tie(b.dist, b.id, b.name);
    });
    std::set<std::string> used_names;
    std::set<std::size_t> used_est;
    for (const Pair& p : pairs) {
      if (used_names.contains(p.name) || used_est.contains(p.est)) continue;
      used_names.insert(p.name);
      used_est.insert(p.est);
      est.push_back(map_objs[p.est].position);
      err.push_back(map_objs[p.est].position - objs.at(p.name).position);
    }
    if (last && fid == *last) {
      r.duplicates = map_objs.size() - used_est.size();
      r.missed = candidates - used_names.size();
    }
  }

  if (est.empty()) throw Error(ErrorCode::NoSamples, "no matched samples to evaluate");
  const double n = static_cast<double>(est.size());
  Eigen::Vector3d mean_err = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < est.size(); ++i) {
    r.mean_position += est[i];
    r.mae += err[i].cwiseAbs();
    mean_err += err[i];
  }
  r.mean_position /= n;
  r.mae /= n;
  mean_err /= n;
  Eigen::Vector3d var = Eigen::Vector3d::Zero();
  for (const auto& e : err) var += (e - mean_err).cwiseAbs2();
  r.error_std = (var / n).cwiseSqrt();
  r.samples = est.size();
  return r;
}

json eval_report_to_json(const EvalReport& r) {
  return {{"mean_position", vec3(r.mean_position)},
          {"mae", vec3(r.mae)},
          {"error_std", vec3(r.error_std)},
          {"samples", r.samples},
          {"duplicates", r.duplicates},
          {"missed", r.missed}};
}

}  // namespace semgraph
