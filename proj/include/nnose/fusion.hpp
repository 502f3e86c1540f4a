#pragma once

#include <span>
#include <vector>

#include "nnose/datastore.hpp"
#include "nnose/types.hpp"

namespace nnose {

struct FusionParams {
  std::size_t k = 8;
  double lambda = 0.25;
  double temperature = 1.0;

  /// Throws InvalidArgument / LambdaOutOfRange when a field is out of range.
  void validate() const;

  bool operator==(const FusionParams&) const = default;
};

/// Label distribution over the retrieved neighbors: each neighbor votes for
/// its value with weight exp(-distance / T). Labels that no neighbor carries
/// get exactly zero. Distances are shifted by their minimum before
/// exponentiation, which cancels in the normalization.
Distribution3 knn_distribution(std::span<const Neighbor> neighbors, double temperature);

/// lambda * p_knn + (1 - lambda) * p_base.
Distribution3 interpolate(const Distribution3& p_knn, const Distribution3& p_base, double lambda);

struct TokenPrediction {
  LabelTag tag = LabelTag::O;
  Distribution3 distribution;

  bool operator==(const TokenPrediction&) const = default;
};

/// Retrieves k neighbors for every token, fuses with the token's base
/// distribution and takes the argmax (ties to the lowest label ordinal).
std::vector<TokenPrediction> infer_sentence(const Datastore& store, const Sentence& sentence,
                                            const FusionParams& params, SearchMode mode);

/// Promotes an I that follows O (or starts the sequence) to B. Idempotent.
std::vector<LabelTag> repair_bio(std::span<const LabelTag> tags);

std::vector<LabelTag> predicted_tags(std::span<const TokenPrediction> predictions);

}  // namespace nnose
