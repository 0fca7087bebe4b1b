#include "semgraph/error.hpp"

namespace semgraph {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::PixelOutOfBounds: return "PixelOutOfBounds";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::FrameMismatch: return "FrameMismatch";
    case ErrorCode::InvalidPose: return "InvalidPose";
    case ErrorCode::InvalidIntrinsics: return "InvalidIntrinsics";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MalformedRle: return "MalformedRle";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::NoValidDepth: return "NoValidDepth";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InvalidPolygon: return "InvalidPolygon";
    case ErrorCode::UnknownRoomInConnection: return "UnknownRoomInConnection";
    case ErrorCode::NoRooms: return "NoRooms";
    case ErrorCode::UnknownObject: return "UnknownObject";
    case ErrorCode::UnknownEndpoint: return "UnknownEndpoint";
    case ErrorCode::SelfRelation: return "SelfRelation";
    case ErrorCode::UnknownRoom: return "UnknownRoom";
    case ErrorCode::NoPath: return "NoPath";
    case ErrorCode::NonMonotonicFrame: return "NonMonotonicFrame";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NoSamples: return "NoSamples";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace semgraph
