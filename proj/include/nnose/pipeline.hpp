#pragma once

// Corpus-level orchestration shared by the CLI commands and the tests.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nnose/datastore.hpp"
#include "nnose/evaluation.hpp"
#include "nnose/fusion.hpp"
#include "nnose/types.hpp"

namespace nnose {

using CorpusTags = std::vector<std::vector<LabelTag>>;
using CorpusPredictions = std::vector<std::vector<TokenPrediction>>;

/// infer_sentence over every sentence; sentences run in parallel and the
/// result is independent of scheduling.
CorpusPredictions infer_corpus(const Datastore& store, const std::vector<Sentence>& sentences,
                               const FusionParams& params, SearchMode mode);

CorpusTags corpus_gold_tags(const std::vector<Sentence>& sentences);
CorpusTags corpus_base_tags(const std::vector<Sentence>& sentences);
CorpusTags corpus_predicted_tags(const CorpusPredictions& predictions);

/// Repairs each sentence's tags, then extracts spans with the sentence's
/// token texts. Throws DimensionMismatch when shapes disagree.
std::vector<Span> corpus_spans(const std::vector<Sentence>& sentences, const CorpusTags& tags);

/// Span P/R/F1 of `predicted` against the sentences' gold tags. With
/// `train`, per-bin scores use the training gold span surfaces.
EvalReport evaluate_corpus(const std::vector<Sentence>& gold, const CorpusTags& predicted,
                           const std::vector<Sentence>* train = nullptr);

McNemarResult corpus_mcnemar(const std::vector<Sentence>& gold, const CorpusTags& system,
                             const CorpusTags& baseline);

struct SweepSpace {
  std::vector<std::size_t> ks{4, 8, 16, 32, 64, 128};
  std::vector<double> lambdas = default_lambdas();
  std::vector<double> temperatures{0.1, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0};

  /// 0.10, 0.15, ..., 0.90.
  static std::vector<double> default_lambdas();

  /// Sorts, de-duplicates and range-checks every axis.
  void normalize();
};

struct SweepPoint {
  FusionParams params;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> grid;  // sorted by (k, lambda, temperature)
  SweepPoint best;
};

/// Exact-search span-F1 for every grid point. The best point maximizes F1
/// with ties to smaller k, then smaller lambda, then smaller temperature.
SweepResult run_sweep(const Datastore& store, const std::vector<Sentence>& dev, SweepSpace space);

/// Key=value fusion parameters: k, lambda, temperature, optionally
/// prefixed "<model>." to override for one model.
struct CrossParams {
  FusionParams defaults;
  std::map<std::string, FusionParams> per_model;
  SearchMode mode = SearchMode::Exact;

  FusionParams for_model(const std::string& model) const;
};

CrossParams parse_cross_params(const std::vector<std::pair<std::string, std::string>>& kv);

struct CrossCell {
  double vanilla_f1 = 0.0;
  double fused_f1 = 0.0;
};

struct CrossMatrix {
  std::vector<std::string> datasets;
  /// cells[train][eval]; empty when that cell's inputs are missing.
  std::vector<std::vector<std::optional<CrossCell>>> cells;
};

/// For each model (train dataset) A and evaluation dataset B, reads
/// <dir>/<A>/store.nds and <dir>/<A>/<B>.ets (B's test set as encoded by
/// model A) and scores vanilla (base argmax) and fused predictions.
CrossMatrix run_crossmatrix(const std::filesystem::path& stores_dir,
                            const std::vector<std::string>& datasets, const CrossParams& params);

}  // namespace nnose
