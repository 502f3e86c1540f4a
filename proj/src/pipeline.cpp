#include "nnose/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "nnose/error.hpp"
#include "nnose/parallel.hpp"
#include "nnose/token_stream.hpp"

namespace nnose {
namespace {

std::size_t parse_count(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size() || value[0] == '-') {
    throw Error(ErrorCode::InvalidArgument, key + ": expected a positive integer, got '" + value + "'");
  }
  return static_cast<std::size_t>(v);
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    throw Error(ErrorCode::InvalidArgument, key + ": expected a number, got '" + value + "'");
  }
  return v;
}

void set_fusion_field(FusionParams& p, const std::string& field, const std::string& key,
                      const std::string& value) {
  if (field == "k") p.k = parse_count(key, value);
  else if (field == "lambda") p.lambda = parse_real(key, value);
  else if (field == "temperature") p.temperature = parse_real(key, value);
  else throw Error(ErrorCode::InvalidArgument, "unknown parameter '" + key + "'");
}

}  // namespace

CorpusPredictions infer_corpus(const Datastore& store, const std::vector<Sentence>& sentences,
                               const FusionParams& params, SearchMode mode) {
  params.validate();
  CorpusPredictions out(sentences.size());
  parallel_for(sentences.size(), [&](std::size_t i) {
    out[i] = infer_sentence(store, sentences[i], params, mode);
  });
  return out;
}

CorpusTags corpus_gold_tags(const std::vector<Sentence>& sentences) {
  CorpusTags tags;
  tags.reserve(sentences.size());
  for (const auto& s : sentences) tags.push_back(gold_tags(s));
  return tags;
}

CorpusTags corpus_base_tags(const std::vector<Sentence>& sentences) {
  CorpusTags tags;
  tags.reserve(sentences.size());
  for (const auto& s : sentences) {
    std::vector<LabelTag> row;
    row.reserve(s.tokens.size());
    for (const auto& t : s.tokens) row.push_back(t.base.argmax());
    tags.push_back(std::move(row));
  }
  return tags;
}

CorpusTags corpus_predicted_tags(const CorpusPredictions& predictions) {
  CorpusTags tags;
  tags.reserve(predictions.size());
  for (const auto& p : predictions) tags.push_back(predicted_tags(p));
  return tags;
}

std::vector<Span> corpus_spans(const std::vector<Sentence>& sentences, const CorpusTags& tags) {
  if (sentences.size() != tags.size()) {
    throw Error(ErrorCode::DimensionMismatch, std::to_string(tags.size()) + " tag rows for " +
                                                  std::to_string(sentences.size()) + " sentences");
  }
  std::vector<Span> spans;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto repaired = repair_bio(tags[i]);
    const auto texts = token_texts(sentences[i]);
    auto row = extract_spans(repaired, texts, i);
    spans.insert(spans.end(), std::make_move_iterator(row.begin()), std::make_move_iterator(row.end()));
  }
  return spans;
}

EvalReport evaluate_corpus(const std::vector<Sentence>& gold, const CorpusTags& predicted,
                           const std::vector<Sentence>* train) {
  const auto gold_spans = corpus_spans(gold, corpus_gold_tags(gold));
  const auto pred_spans = corpus_spans(gold, predicted);
  EvalReport report = span_scores(gold_spans, pred_spans);
  if (train) {
    const auto train_spans = corpus_spans(*train, corpus_gold_tags(*train));
    report.per_bin = per_bin_f1(gold_spans, pred_spans, count_surfaces(train_spans));
  }
  return report;
}

McNemarResult corpus_mcnemar(const std::vector<Sentence>& gold, const CorpusTags& system,
                             const CorpusTags& baseline) {
  if (system.size() != gold.size() || baseline.size() != gold.size()) {
    throw Error(ErrorCode::DimensionMismatch, "McNemar inputs cover different sentence counts");
  }
  std::vector<LabelTag> a;
  std::vector<LabelTag> b;
  std::vector<LabelTag> g;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto sys = repair_bio(system[i]);
    const auto base = repair_bio(baseline[i]);
    const auto ref = gold_tags(gold[i]);
    if (sys.size() != ref.size() || base.size() != ref.size()) {
      throw Error(ErrorCode::DimensionMismatch, "sentence " + std::to_string(i) + " length differs");
    }
    a.insert(a.end(), sys.begin(), sys.end());
    b.insert(b.end(), base.begin(), base.end());
    g.insert(g.end(), ref.begin(), ref.end());
  }
  return mcnemar_token(a, b, g);
}

std::vector<double> SweepSpace::default_lambdas() {
  std::vector<double> out;
  for (int step = 10; step <= 90; step += 5) out.push_back(step / 100.0);
  return out;
}

void SweepSpace::normalize() {
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
  std::sort(temperatures.begin(), temperatures.end());
  temperatures.erase(std::unique(temperatures.begin(), temperatures.end()), temperatures.end());
  if (ks.empty() || lambdas.empty() || temperatures.empty()) {
    throw Error(ErrorCode::InvalidArgument, "sweep space has an empty axis");
  }
  FusionParams probe;
  for (auto k : ks) {
    probe.k = k;
    probe.validate();
  }
  probe.k = 1;
  for (auto l : lambdas) {
    probe.lambda = l;
    probe.validate();
  }
  probe.lambda = 0.0;
  for (auto t : temperatures) {
    probe.temperature = t;
    probe.validate();
  }
}

SweepResult run_sweep(const Datastore& store, const std::vector<Sentence>& dev, SweepSpace space) {
  space.normalize();
  const std::size_t max_k = space.ks.back();

  // Retrieve once at the largest k; smaller k values are prefixes because
  // results are fully ordered by (distance, entry index).
  std::vector<std::vector<std::vector<Neighbor>>> neighbors(dev.size());
  parallel_for(dev.size(), [&](std::size_t s) {
    auto& row = neighbors[s];
    row.reserve(dev[s].tokens.size());
    for (const auto& tok : dev[s].tokens) row.push_back(exact_search(store, tok.embedding, max_k));
  });

  const auto gold_spans = corpus_spans(dev, corpus_gold_tags(dev));
  const std::size_t n_k = space.ks.size();
  const std::size_t n_l = space.lambdas.size();
  const std::size_t n_t = space.temperatures.size();

  SweepResult result;
  result.grid.resize(n_k * n_l * n_t);
  parallel_for(n_k * n_t, [&](std::size_t job) {
    const std::size_t ki = job / n_t;
    const std::size_t ti = job % n_t;
    const std::size_t k = space.ks[ki];
    const double temperature = space.temperatures[ti];

    std::vector<std::vector<Distribution3>> knn(dev.size());
    for (std::size_t s = 0; s < dev.size(); ++s) {
      knn[s].reserve(dev[s].tokens.size());
      for (const auto& nbs : neighbors[s]) {
        const std::size_t take = std::min(k, nbs.size());
        knn[s].push_back(knn_distribution(std::span(nbs).first(take), temperature));
      }
    }
    for (std::size_t li = 0; li < n_l; ++li) {
      const double lambda = space.lambdas[li];
      CorpusTags tags(dev.size());
      for (std::size_t s = 0; s < dev.size(); ++s) {
        tags[s].reserve(dev[s].tokens.size());
        for (std::size_t t = 0; t < dev[s].tokens.size(); ++t) {
          tags[s].push_back(interpolate(knn[s][t], dev[s].tokens[t].base, lambda).argmax());
        }
      }
      const auto report = span_scores(gold_spans, corpus_spans(dev, tags));
      SweepPoint& point = result.grid[(ki * n_l + li) * n_t + ti];
      point.params = FusionParams{k, lambda, temperature};
      point.precision = report.precision;
      point.recall = report.recall;
      point.f1 = report.f1;
    }
  });

  result.best = result.grid.front();
  for (const auto& p : result.grid) {
    if (p.f1 > result.best.f1) result.best = p;
  }
  return result;
}

FusionParams CrossParams::for_model(const std::string& model) const {
  const auto it = per_model.find(model);
  return it == per_model.end() ? defaults : it->second;
}

CrossParams parse_cross_params(const std::vector<std::pair<std::string, std::string>>& kv) {
  CrossParams params;
  // Global keys first so per-model overrides start from the final defaults.
  for (const auto& [key, value] : kv) {
    if (key.find('.') != std::string::npos) continue;
    if (key == "mode") {
      if (value == "exact") params.mode = SearchMode::Exact;
      else if (value == "clustered") params.mode = SearchMode::Clustered;
      else throw Error(ErrorCode::InvalidArgument, "mode must be exact or clustered");
    } else {
      set_fusion_field(params.defaults, key, key, value);
    }
  }
  for (const auto& [key, value] : kv) {
    const auto dot = key.rfind('.');
    if (dot == std::string::npos) continue;
    const std::string model = key.substr(0, dot);
    auto [it, inserted] = params.per_model.try_emplace(model, params.defaults);
    set_fusion_field(it->second, key.substr(dot + 1), key, value);
  }
  params.defaults.validate();
  for (const auto& [model, p] : params.per_model) p.validate();
  return params;
}

CrossMatrix run_crossmatrix(const std::filesystem::path& stores_dir,
                            const std::vector<std::string>& datasets, const CrossParams& params) {
  CrossMatrix matrix;
  matrix.datasets = datasets;
  const std::size_t n = datasets.size();
  matrix.cells.assign(n, std::vector<std::optional<CrossCell>>(n));
  for (std::size_t a = 0; a < n; ++a) {
    const auto model_dir = stores_dir / datasets[a];
    const auto store_path = model_dir / "store.nds";
    if (!std::filesystem::exists(store_path)) continue;
    const Datastore store = load_datastore(store_path);
    const FusionParams fusion = params.for_model(datasets[a]);
    for (std::size_t b = 0; b < n; ++b) {
      const auto eval_path = model_dir / (datasets[b] + ".ets");
      if (!std::filesystem::exists(eval_path)) continue;
      const auto sentences = read_token_stream(eval_path, static_cast<std::uint32_t>(store.dim()));
      CrossCell cell;
      cell.vanilla_f1 = evaluate_corpus(sentences, corpus_base_tags(sentences)).f1;
      const auto fused = infer_corpus(store, sentences, fusion, params.mode);
      cell.fused_f1 = evaluate_corpus(sentences, corpus_predicted_tags(fused)).f1;
      matrix.cells[a][b] = cell;
    }
  }
  return matrix;
}

}  // namespace nnose
