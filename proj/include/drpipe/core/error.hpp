#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace drpipe {

enum class ErrorCode {
  kInvalidArgument,
  kNonPositiveFps,
  kNonUnitQuaternion,
  kDimMismatch,
  kBehindCamera,
  kInvalidConfig,
  kIo,
  kManifestSchema,
  kNoBoundary,
  kNoDepth,
  kEmptyInstance,
  kDegenerateDepth,
  kDegenerateGeometry,
  kMissingPrevPose,
  kZeroExtent,
  kAssetFormat,
  kUnknownAsset,
  kStageFailure,
  kOutOfOrderFrame,
  kOversizedPayload,
  kNonFiniteFloat,
  kMalformedMessage,
  kEmptyRegion,
  kMisaligned,
  kBundleMismatch,
  kBindFailure,
  kConnectFailure,
  kProtocolError,
  kSourceError,
  kNoInstanceAtPoint,
};

std::string_view error_code_name(ErrorCode code);

// Every failure surfaced by the library carries one of the codes above so
// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& detail);

}  // namespace drpipe
