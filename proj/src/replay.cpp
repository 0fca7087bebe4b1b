#include "semgraph/replay.hpp"

#include <chrono>
#include <memory>

namespace semgraph {

std::vector<ObjectEstimate> map_estimates(const SemanticMap& map) {
  std::vector<ObjectEstimate> out;
  out.reserve(map.objects().size());
  for (const auto& [id, o] : map.objects()) out.push_back({id, o.label, o.position});
  return out;
}

ReplayResult replay(Pipeline& pipeline, const FrameSource& next) {
  ReplayResult r;
  while (auto frame = next()) {
    const auto t0 = std::chrono::steady_clock::now();
    SceneGraph scene = pipeline.process_frame(*frame);
    const auto t1 = std::chrono::steady_clock::now();
    r.frame_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    r.estimates[scene.frame_id] = map_estimates(pipeline.map());
    r.scenes.push_back(std::move(scene));
  }
  return r;
}

FrameSource simulated_frames(const SceneSpec& spec, std::uint64_t seed) {
  auto index = std::make_shared<std::size_t>(0);
  return [spec, seed, index]() -> std::optional<FrameInput> {
    if (*index >= spec.trajectory.size()) return std::nullopt;
    return render_frame(spec, (*index)++, seed);
  };
}

}  // namespace semgraph
