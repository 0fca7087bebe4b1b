#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "semgraph/pipeline.hpp"

namespace semgraph {

using nlohmann::json;

// Wire forms shared by frame logs, scene specs and map exports.
json pose_to_json(const Pose& p);
/// {"t":[x,y,z],"q":[w,x,y,z]}; the quaternion is normalized, and rejected
/// if its norm is more than 1e-3 away from 1.
Pose pose_from_json(const json& j);

json intrinsics_to_json(const Intrinsics& k);
Intrinsics intrinsics_from_json(const json& j);

/// {"size":[height,width],"counts":[...]}, row-major, leading zero-run.
json mask_to_json(const Mask& m);
Mask mask_from_json(const json& j);

/// Binary 16-bit PGM (P5, maxval 65535, big-endian samples).
DepthImage read_pgm16(const std::filesystem::path& path);
void write_pgm16(const std::filesystem::path& path, const DepthImage& depth);

/// One frame-log line. The depth image is loaded from `depth_file`,
/// resolved against `base_dir`.
FrameInput frame_from_json(const json& j, const std::filesystem::path& base_dir);
json frame_to_json(const FrameInput& frame, const std::string& depth_file);

json scene_to_json(const SceneGraph& scene);

/// Sequential reader over a JSON-lines frame log; blank lines are skipped.
class FrameLogReader {
 public:
  explicit FrameLogReader(const std::filesystem::path& path);

  /// Next frame, or nullopt at end of file. Throws ParseError tagged with the
  /// line number (and frame_id when it could be read).
  std::optional<FrameInput> next();
  std::size_t line_number() const { return line_no_; }

 private:
  std::ifstream in_;
  std::filesystem::path base_dir_;
  std::size_t line_no_ = 0;
};

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace semgraph
