#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lfd {

enum class ErrorKind {
  // hexgrid
  EmptyGrid,
  UnknownLens,
  // plenoptic
  OddDimensions,
  OutOfBounds,
  MismatchedKeys,
  // net
  ShapeMismatch,
  EmptyMask,
  NoTrainingData,
  // align
  NonPositiveDepth,
  TooFewCorrespondences,
  DegenerateX,
  NoConsensus,
  // stereo
  InvalidRange,
  DegenerateGeometry,
  // metrics
  NoOverlap,
  // io / cli
  MissingAsset,
  FormatError,
  BehindFocalPlane,
  InvalidArgument,
  Usage,
  NonFinite,
};

std::string_view to_string(ErrorKind kind);

/// Process exit code for a failure of the given kind: 1 usage, 2 data, 3 numeric.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace lfd
