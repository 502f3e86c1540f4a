#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nnose {

enum class ErrorCode {
  MagicMismatch,
  VersionMismatch,
  DimensionMismatch,
  MixedDimensions,
  MixedDatasetIds,
  CorruptRecord,
  CorruptFile,
  BadDistribution,
  NonFinite,
  IoFailure,
  TooFewSamples,
  RankDeficient,
  EmptyInput,
  EmptyStore,
  NoCentroids,
  EmptyNeighborList,
  LambdaOutOfRange,
  UnrepairedSequence,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nnose
