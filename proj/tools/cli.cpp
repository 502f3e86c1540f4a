#include "cli.hpp"

#include <CLI11.hpp>
#include <ostream>

#include "nnose/commands.hpp"
#include "nnose/kv_config.hpp"

namespace nnose {
namespace {

const std::map<std::string, SearchMode> kModes{{"exact", SearchMode::Exact},
                                               {"clustered", SearchMode::Clustered}};

void add_fusion_flags(CLI::App* cmd, FusionParams& params) {
  cmd->add_option("--k", params.k, "Neighbors retrieved per token")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", params.lambda, "Interpolation weight of the kNN distribution")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--temperature", params.temperature, "Softmax temperature over distances")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Nearest-neighbor augmented BIO span extraction"};
  app.require_subcommand(1);

  SynthOptions synth;
  std::optional<std::string> synth_config_file;
  std::vector<std::string> synth_sets;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic corpus (train/dev/test ETS1)");
  synth_cmd->add_option("--config", synth_config_file, "key=value config file")->check(CLI::ExistingFile);
  synth_cmd->add_option("--set", synth_sets, "Override a setting, key=value (repeatable)");
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();

  BuildOptions build;
  bool no_whitening = false;
  auto* build_cmd = app.add_subcommand("build", "Build an NDS1 datastore from ETS1 training files");
  build_cmd->add_option("inputs", build.inputs, "Training ETS1 files (several = all-dataset store)")
      ->required();
  build_cmd->add_flag("--no-whitening", no_whitening, "Store raw keys");
  build_cmd->add_option("--centroids", build.config.ncentroids, "k-means centroids")
      ->check(CLI::PositiveNumber);
  build_cmd->add_option("--nprobe", build.config.nprobe, "Centroids scanned per query")
      ->check(CLI::PositiveNumber);
  build_cmd->add_option("--kmeans-iters", build.config.kmeans_iters, "Lloyd iterations")
      ->check(CLI::PositiveNumber);
  build_cmd->add_option("--seed", build.config.seed, "k-means seed");
  build_cmd->add_option("--out", build.out, "Output NDS1 path")->required();

  InferOptions infer;
  auto* infer_cmd = app.add_subcommand("infer", "Predict tags for an ETS1 file");
  infer_cmd->add_option("--store", infer.store, "NDS1 datastore")->required();
  infer_cmd->add_option("--input", infer.input, "ETS1 input")->required();
  infer_cmd->add_option("--out", infer.out, "Prediction file")->required();
  infer_cmd->add_option("--mode", infer.mode, "exact or clustered")
      ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));
  add_fusion_flags(infer_cmd, infer.params);

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Span precision/recall/F1, frequency bins, McNemar");
  eval_cmd->add_option("--gold", eval.gold, "Gold ETS1 file")->required();
  eval_cmd->add_option("--pred", eval.pred, "Prediction file")->required();
  eval_cmd->add_option("--train", eval.train, "Training ETS1 file for frequency bins");
  eval_cmd->add_option("--baseline-pred", eval.baseline_pred, "Baseline predictions for McNemar");
  eval_cmd->add_option("--records", eval.records, "Write metric records here");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid search k, lambda, temperature on dev");
  sweep_cmd->add_option("--store", sweep.store, "NDS1 datastore")->required();
  sweep_cmd->add_option("--dev", sweep.dev, "Dev ETS1 file")->required();
  sweep_cmd->add_option("--ks", sweep.space.ks, "k grid")->delimiter(',');
  sweep_cmd->add_option("--lambdas", sweep.space.lambdas, "lambda grid")->delimiter(',');
  sweep_cmd->add_option("--temperatures", sweep.space.temperatures, "temperature grid")->delimiter(',');
  sweep_cmd->add_option("--records", sweep.records, "Write grid records here instead of stdout");

  CrossMatrixOptions cross;
  auto* cross_cmd = app.add_subcommand("crossmatrix", "Cross-dataset span-F1 matrix");
  cross_cmd->add_option("--stores", cross.stores_dir,
                        "Directory with <model>/store.nds and <model>/<dataset>.ets")
      ->required();
  cross_cmd->add_option("--datasets", cross.datasets, "Dataset ids in matrix order")->required();
  cross_cmd->add_option("--params", cross.params, "key=value fusion parameters");
  cross_cmd->add_option("--records", cross.records, "Write matrix records here");

  ProvenanceOptions prov;
  auto* prov_cmd = app.add_subcommand("provenance", "Count retrieved neighbors per source dataset");
  prov_cmd->add_option("--store", prov.store, "NDS1 datastore")->required();
  prov_cmd->add_option("--input", prov.input, "ETS1 queries")->required();
  prov_cmd->add_option("--k", prov.k, "Neighbors per query")->check(CLI::PositiveNumber);
  prov_cmd->add_option("--mode", prov.mode, "exact or clustered")
      ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case));
  prov_cmd->add_option("--records", prov.records, "Write records here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help exits 0; every usage error exits 1 like the command failures.
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  if (*synth_cmd) {
    try {
      if (synth_config_file) {
        for (const auto& [k, v] : read_kv_file(*synth_config_file)) apply_synth_setting(synth.config, k, v);
      }
      for (const auto& s : synth_sets) {
        const auto [k, v] = split_assignment(s);
        apply_synth_setting(synth.config, k, v);
      }
    } catch (const std::exception& e) {
      err << "nnose synth: " << e.what() << "\n";
      return 1;
    }
    return cmd_synth(synth, out, err);
  }
  if (*build_cmd) {
    build.config.use_whitening = !no_whitening;
    return cmd_build(build, out, err);
  }
  if (*infer_cmd) return cmd_infer(infer, out, err);
  if (*eval_cmd) return cmd_eval(eval, out, err);
  if (*sweep_cmd) return cmd_sweep(sweep, out, err);
  if (*cross_cmd) return cmd_crossmatrix(cross, out, err);
  if (*prov_cmd) return cmd_provenance(prov, out, err);
  return 1;
}

}  // namespace nnose
