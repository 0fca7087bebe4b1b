#pragma once

namespace semgraph {

/// Configures the default stderr logger from SEMGRAPH_LOG (off|info|debug;
/// unset means off). Returns false for an unrecognised value.
bool init_logging();

}  // namespace semgraph
