#include "nnose/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "nnose/error.hpp"

namespace nnose {

void FusionParams::validate() const {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::LambdaOutOfRange, "lambda " + std::to_string(lambda));
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  }
}

Distribution3 knn_distribution(std::span<const Neighbor> neighbors, double temperature) {
  if (neighbors.empty()) throw Error(ErrorCode::EmptyNeighborList, "no neighbors retrieved");
  if (!(temperature > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
  double min_d = neighbors.front().distance;
  for (const auto& nb : neighbors) {
    if (!std::isfinite(nb.distance)) throw Error(ErrorCode::NonFinite, "neighbor distance");
    min_d = std::min(min_d, nb.distance);
  }
  Distribution3 mass;
  for (const auto& nb : neighbors) {
    mass[nb.value] += std::exp(-(nb.distance - min_d) / temperature);
  }
  // The nearest neighbor contributes exp(0) = 1, so the total is >= 1.
  const double total = mass.sum();
  for (auto& v : mass.p) v /= total;
  return mass;
}

Distribution3 interpolate(const Distribution3& p_knn, const Distribution3& p_base, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::LambdaOutOfRange, "lambda " + std::to_string(lambda));
  }
  Distribution3 out;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    out.p[i] = lambda * p_knn.p[i] + (1.0 - lambda) * p_base.p[i];
  }
  return out;
}

std::vector<TokenPrediction> infer_sentence(const Datastore& store, const Sentence& sentence,
                                            const FusionParams& params, SearchMode mode) {
  params.validate();
  std::vector<TokenPrediction> out;
  out.reserve(sentence.tokens.size());
  for (const auto& tok : sentence.tokens) {
    const auto neighbors = search(store, tok.embedding, params.k, mode);
    TokenPrediction pred;
    pred.distribution =
        interpolate(knn_distribution(neighbors, params.temperature), tok.base, params.lambda);
    pred.tag = pred.distribution.argmax();
    out.push_back(pred);
  }
  return out;
}

std::vector<LabelTag> repair_bio(std::span<const LabelTag> tags) {
  std::vector<LabelTag> out(tags.begin(), tags.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i] == LabelTag::I && (i == 0 || out[i - 1] == LabelTag::O)) out[i] = LabelTag::B;
  }
  return out;
}

std::vector<LabelTag> predicted_tags(std::span<const TokenPrediction> predictions) {
  std::vector<LabelTag> tags;
  tags.reserve(predictions.size());
  for (const auto& p : predictions) tags.push_back(p.tag);
  return tags;
}

}  // namespace nnose
