#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semgraph {

enum class ErrorCode {
  // geometry
  NonPositiveDepth,
  PixelOutOfBounds,
  BehindCamera,
  FrameMismatch,
  InvalidPose,
  InvalidIntrinsics,
  // mask
  DimensionMismatch,
  MalformedRle,
  EmptyMask,
  NoValidDepth,
  // filter
  DegenerateWeights,
  InvalidConfig,
  // graph
  ParseError,
  InvalidInput,
  InvalidPolygon,
  UnknownRoomInConnection,
  NoRooms,
  UnknownObject,
  UnknownEndpoint,
  SelfRelation,
  UnknownRoom,
  NoPath,
  // pipeline
  NonMonotonicFrame,
  // sim
  IndexOutOfRange,
  NoSamples,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the engine carries one of the codes above so that
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace semgraph
