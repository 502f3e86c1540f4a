#include "nnose/error.hpp"

namespace nnose {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MagicMismatch: return "MagicMismatch";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MixedDimensions: return "MixedDimensions";
    case ErrorCode::MixedDatasetIds: return "MixedDatasetIds";
    case ErrorCode::CorruptRecord: return "CorruptRecord";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::BadDistribution: return "BadDistribution";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyStore: return "EmptyStore";
    case ErrorCode::NoCentroids: return "NoCentroids";
    case ErrorCode::EmptyNeighborList: return "EmptyNeighborList";
    case ErrorCode::LambdaOutOfRange: return "LambdaOutOfRange";
    case ErrorCode::UnrepairedSequence: return "UnrepairedSequence";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace nnose
