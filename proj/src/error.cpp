#include "lfdepth/error.hpp"

namespace lfd {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyGrid: return "EmptyGrid";
    case ErrorKind::UnknownLens: return "UnknownLens";
    case ErrorKind::OddDimensions: return "OddDimensions";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::MismatchedKeys: return "MismatchedKeys";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::NoTrainingData: return "NoTrainingData";
    case ErrorKind::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorKind::TooFewCorrespondences: return "TooFewCorrespondences";
    case ErrorKind::DegenerateX: return "DegenerateX";
    case ErrorKind::NoConsensus: return "NoConsensus";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::MissingAsset: return "MissingAsset";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::BehindFocalPlane: return "BehindFocalPlane";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Usage: return "Usage";
  }
  return "Unknown";
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::InvalidArgument:
      return 1;
    case ErrorKind::EmptyMask:
    case ErrorKind::DegenerateX:
    case ErrorKind::NoConsensus:
    case ErrorKind::NonFinite:
    case ErrorKind::DegenerateGeometry:
    case ErrorKind::BehindFocalPlane:
    case ErrorKind::NonPositiveDepth:
      return 3;
    default:
      return 2;
  }
}

}  // namespace lfd
