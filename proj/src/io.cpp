#include "semgraph/io.hpp"

#include <cmath>
#include <sstream>

namespace semgraph {

namespace {

json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::ParseError, std::string(what) + " must be a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// Skips whitespace and '#' comments in a PNM header.
void skip_pnm_space(std::istream& in) {
  for (;;) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      return;
    }
  }
}

}  // namespace

json pose_to_json(const Pose& p) {
  const auto& q = p.rotation();
  return {{"t", vec3(p.translation())}, {"q", json::array({q.w(), q.x(), q.y(), q.z()})}};
}

Pose pose_from_json(const json& j) {
  try {
    const Eigen::Vector3d t = vec3_from(j.at("t"), "pose.t");
    const json& q = j.at("q");
    if (!q.is_array() || q.size() != 4) {
      throw Error(ErrorCode::ParseError, "pose.q must be [w,x,y,z]");
    }
    const Eigen::Quaterniond quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                                  q[3].get<double>());
    if (!(std::abs(quat.norm() - 1.0) <= 1e-3)) {
      throw Error(ErrorCode::InvalidPose, "quaternion norm deviates from 1 by more than 1e-3");
    }
    return {t, quat};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

json intrinsics_to_json(const Intrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy},         {"cx", k.cx},
          {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

Intrinsics intrinsics_from_json(const json& j) {
  Intrinsics k;
  try {
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  k.validate();
  return k;
}

json mask_to_json(const Mask& m) {
  return {{"size", json::array({m.height(), m.width()})}, {"counts", m.counts()}};
}

Mask mask_from_json(const json& j) {
  try {
    const json& size = j.at("size");
    if (!size.is_array() || size.size() != 2) {
      throw Error(ErrorCode::ParseError, "mask size must be [height, width]");
    }
    return Mask::from_counts(size[1].get<int>(), size[0].get<int>(),
                             j.at("counts").get<std::vector<std::uint32_t>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

DepthImage read_pgm16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open depth file " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5") throw Error(ErrorCode::ParseError, path.string() + ": not a binary PGM");
  int w = 0;
  int h = 0;
  int maxval = 0;
  skip_pnm_space(in);
  in >> w;
  skip_pnm_space(in);
  in >> h;
  skip_pnm_space(in);
  in >> maxval;
  if (!in || w <= 0 || h <= 0 || maxval <= 255 || maxval > 65535) {
    throw Error(ErrorCode::ParseError, path.string() + ": expected a 16-bit PGM header");
  }
  in.get();  // single whitespace before the raster
  DepthImage depth(w, h);
  std::vector<unsigned char> raw(depth.mm.size() * 2);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw Error(ErrorCode::ParseError, path.string() + ": truncated raster");
  }
  for (std::size_t i = 0; i < depth.mm.size(); ++i) {
    depth.mm[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  }
  return depth;
}

void write_pgm16(const std::filesystem::path& path, const DepthImage& depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "P5\n" << depth.width << " " << depth.height << "\n65535\n";
  std::vector<unsigned char> raw(depth.mm.size() * 2);
  for (std::size_t i = 0; i < depth.mm.size(); ++i) {
    raw[2 * i] = static_cast<unsigned char>(depth.mm[i] >> 8);
    raw[2 * i + 1] = static_cast<unsigned char>(depth.mm[i] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

FrameInput frame_from_json(const json& j, const std::filesystem::path& base_dir) {
  FrameInput f;
  try {
    f.frame_id = j.at("frame_id").get<std::int64_t>();
    f.camera_pose = pose_from_json(j.at("camera_pose"));
    f.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    for (const auto& d : j.value("detections", json::array())) {
      Detection det;
      det.label = d.at("label").get<std::string>();
      det.score = d.value("score", 1.0);
      det.mask = mask_from_json(d.at("mask_rle"));
      f.detections.push_back(std::move(det));
    }
    for (const auto& r : j.value("relations", json::array())) {
      RelationDetection rel;
      rel.subject = r.at("subject").get<std::size_t>();
      rel.object = r.at("object").get<std::size_t>();
      rel.predicate = r.at("predicate").get<std::string>();
      rel.probability = r.at("probability").get<double>();
      f.relations.push_back(std::move(rel));
    }
    const std::string depth_file = j.at("depth_file").get<std::string>();
    std::filesystem::path p(depth_file);
    f.depth = read_pgm16(p.is_absolute() ? p : base_dir / p);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return f;
}

json frame_to_json(const FrameInput& frame, const std::string& depth_file) {
  json dets = json::array();
  for (const auto& d : frame.detections) {
    dets.push_back({{"label", d.label}, {"score", d.score}, {"mask_rle", mask_to_json(d.mask)}});
  }
  json rels = json::array();
  for (const auto& r : frame.relations) {
    rels.push_back({{"subject", r.subject},
                    {"object", r.object},
                    {"predicate", r.predicate},
                    {"probability", r.probability}});
  }
  return {{"frame_id", frame.frame_id},
          {"camera_pose", pose_to_json(frame.camera_pose)},
          {"intrinsics", intrinsics_to_json(frame.intrinsics)},
          {"depth_file", depth_file},
          {"detections", std::move(dets)},
          {"relations", std::move(rels)}};
}

json scene_to_json(const SceneGraph& scene) {
  json objects = json::array();
  for (const auto& o : scene.objects) {
    objects.push_back({{"id", o.id},
                       {"detection", o.detection},
                       {"label", o.label},
                       {"position", vec3(o.position)},
                       {"observation", vec3(o.observation)},
                       {"iou", o.iou},
                       {"created", o.created}});
  }
  json relations = json::array();
  for (const auto& r : scene.relations) {
    relations.push_back({{"source", r.source},
                         {"target", r.target},
                         {"predicate", r.predicate},
                         {"probability", r.probability}});
  }
  return {{"frame_id", scene.frame_id},
          {"revision", scene.revision},
          {"objects", std::move(objects)},
          {"relations", std::move(relations)},
          {"removed", scene.removed},
          {"dropped",
           {{"far", scene.dropped_far},
            {"no_depth", scene.dropped_no_depth},
            {"low_score", scene.dropped_low_score}}},
          {"rejected_relations", scene.rejected_relations}};
}

FrameLogReader::FrameLogReader(const std::filesystem::path& path)
    : in_(path), base_dir_(path.parent_path()) {
  if (!in_) throw Error(ErrorCode::IoError, "cannot open frame log " + path.string());
}

std::optional<FrameInput> FrameLogReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no_) + ": " + e.what());
    }
    try {
      return frame_from_json(j, base_dir_);
    } catch (const Error& e) {
      std::string where = "line " + std::to_string(line_no_);
      if (j.is_object() && j.contains("frame_id") && j["frame_id"].is_number_integer()) {
        where += " (frame_id " + std::to_string(j["frame_id"].get<std::int64_t>()) + ")";
      }
      throw Error(e.code(), where + ": " + e.what());
    }
  }
  return std::nullopt;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace semgraph
