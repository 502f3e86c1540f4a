#pragma once

// Command implementations behind the `nnose` CLI. Each returns the process
// exit code: 0 when the requested artifact or report was fully produced,
// 1 on any error (message written to `err`).

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nnose/datastore.hpp"
#include "nnose/fusion.hpp"
#include "nnose/pipeline.hpp"
#include "nnose/synth.hpp"

namespace nnose {

/// Prediction file: one line per token,
/// "<sentence>\t<token>\t<tag>\t<pO>\t<pB>\t<pI>" with 6 decimals.
std::string format_predictions(const CorpusPredictions& predictions);

/// Reads the tag column back, grouped by sentence. Indices must be
/// contiguous and start at zero; violations raise CorruptRecord.
CorpusTags read_prediction_tags(const std::filesystem::path& path);
CorpusTags parse_prediction_tags(std::string_view text);

struct SynthOptions {
  SynthConfig config;
  std::filesystem::path out_dir;
};

struct BuildOptions {
  std::vector<std::filesystem::path> inputs;
  DatastoreConfig config;
  std::filesystem::path out;
};

struct InferOptions {
  std::filesystem::path store;
  std::filesystem::path input;
  std::filesystem::path out;
  FusionParams params;
  SearchMode mode = SearchMode::Clustered;
};

struct EvalOptions {
  std::filesystem::path gold;
  std::filesystem::path pred;
  std::optional<std::filesystem::path> train;
  std::optional<std::filesystem::path> baseline_pred;
  std::optional<std::filesystem::path> records;
};

struct SweepOptions {
  std::filesystem::path store;
  std::filesystem::path dev;
  SweepSpace space;
  std::optional<std::filesystem::path> records;
};

struct CrossMatrixOptions {
  std::filesystem::path stores_dir;
  std::vector<std::string> datasets;
  std::optional<std::filesystem::path> params;
  std::optional<std::filesystem::path> records;
};

struct ProvenanceOptions {
  std::filesystem::path store;
  std::filesystem::path input;
  std::size_t k = 8;
  SearchMode mode = SearchMode::Clustered;
  std::optional<std::filesystem::path> records;
};

int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err);
int cmd_build(const BuildOptions& options, std::ostream& out, std::ostream& err);
int cmd_infer(const InferOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepOptions& options, std::ostream& out, std::ostream& err);
int cmd_crossmatrix(const CrossMatrixOptions& options, std::ostream& out, std::ostream& err);
int cmd_provenance(const ProvenanceOptions& options, std::ostream& out, std::ostream& err);

std::vector<MetricRecord> sweep_records(const SweepResult& result);
std::vector<MetricRecord> crossmatrix_records(const CrossMatrix& matrix);
std::string format_crossmatrix_table(const CrossMatrix& matrix);

}  // namespace nnose
