#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "semgraph/pipeline.hpp"
#include "semgraph/sim.hpp"

namespace semgraph {

using FrameSource = std::function<std::optional<FrameInput>()>;

struct ReplayResult {
  std::vector<SceneGraph> scenes;
  FrameEstimates estimates;     // map contents after each frame
  std::vector<double> frame_ms;  // process_frame wall time
};

/// Feeds every frame from `next` through the pipeline in order.
ReplayResult replay(Pipeline& pipeline, const FrameSource& next);

/// Current map objects as evaluation estimates, ordered by id.
std::vector<ObjectEstimate> map_estimates(const SemanticMap& map);

/// Frames rendered on the fly from a scene spec.
FrameSource simulated_frames(const SceneSpec& spec, std::uint64_t seed);

}  // namespace semgraph
