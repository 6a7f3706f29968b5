#include "drpipe/core/error.hpp"

namespace drpipe {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kNonPositiveFps: return "NonPositiveFps";
    case ErrorCode::kNonUnitQuaternion: return "NonUnitQuaternion";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kBehindCamera: return "BehindCamera";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kManifestSchema: return "ManifestSchema";
    case ErrorCode::kNoBoundary: return "NoBoundary";
    case ErrorCode::kNoDepth: return "NoDepth";
    case ErrorCode::kEmptyInstance: return "EmptyInstance";
    case ErrorCode::kDegenerateDepth: return "DegenerateDepth";
    case ErrorCode::kDegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::kMissingPrevPose: return "MissingPrevPose";
    case ErrorCode::kZeroExtent: return "ZeroExtent";
    case ErrorCode::kAssetFormat: return "AssetFormat";
    case ErrorCode::kUnknownAsset: return "UnknownAsset";
    case ErrorCode::kStageFailure: return "StageFailure";
    case ErrorCode::kOutOfOrderFrame: return "OutOfOrderFrame";
    case ErrorCode::kOversizedPayload: return "OversizedPayload";
    case ErrorCode::kNonFiniteFloat: return "NonFiniteFloat";
    case ErrorCode::kMalformedMessage: return "MalformedMessage";
    case ErrorCode::kEmptyRegion: return "EmptyRegion";
    case ErrorCode::kMisaligned: return "Misaligned";
    case ErrorCode::kBundleMismatch: return "BundleMismatch";
    case ErrorCode::kBindFailure: return "BindFailure";
    case ErrorCode::kConnectFailure: return "ConnectFailure";
    case ErrorCode::kProtocolError: return "ProtocolError";
    case ErrorCode::kSourceError: return "SourceError";
    case ErrorCode::kNoInstanceAtPoint: return "NoInstanceAtPoint";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + detail), code_(code) {}

void fail(ErrorCode code, const std::string& detail) { throw Error(code, detail); }

}  // namespace drpipe
