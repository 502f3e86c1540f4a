#include "nnose/commands.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "byte_io.hpp"
#include "nnose/error.hpp"
#include "nnose/kv_config.hpp"
#include "nnose/token_stream.hpp"

namespace nnose {
namespace {

std::string format_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void write_records(const std::optional<std::filesystem::path>& path,
                   const std::vector<MetricRecord>& records) {
  if (path) detail::write_file_atomic(*path, format_records(records));
}

template <typename Fn>
int guarded(std::ostream& err, const char* command, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "nnose " << command << ": " << e.what() << "\n";
    return 1;
  }
}

std::string_view mode_name(SearchMode mode) {
  return mode == SearchMode::Exact ? "exact" : "clustered";
}

}  // namespace

std::string format_predictions(const CorpusPredictions& predictions) {
  std::string out;
  char line[160];
  for (std::size_t s = 0; s < predictions.size(); ++s) {
    for (std::size_t t = 0; t < predictions[s].size(); ++t) {
      const auto& p = predictions[s][t];
      std::snprintf(line, sizeof(line), "%zu\t%zu\t%c\t%.6f\t%.6f\t%.6f\n", s, t, label_char(p.tag),
                    p.distribution[LabelTag::O], p.distribution[LabelTag::B],
                    p.distribution[LabelTag::I]);
      out += line;
    }
  }
  return out;
}

CorpusTags parse_prediction_tags(std::string_view text) {
  CorpusTags tags;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    auto fail = [&](const std::string& what) {
      return Error(ErrorCode::CorruptRecord, "prediction line " + std::to_string(line_no) + ": " + what);
    };
    if (fields.size() != 6) throw fail("expected 6 tab-separated fields");
    std::size_t s = 0;
    std::size_t t = 0;
    try {
      std::size_t used = 0;
      s = std::stoull(std::string(fields[0]), &used);
      if (used != fields[0].size()) throw fail("bad sentence index");
      t = std::stoull(std::string(fields[1]), &used);
      if (used != fields[1].size()) throw fail("bad token index");
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      throw fail("bad index");
    }
    const auto tag = parse_label(fields[2]);
    if (!tag) throw fail("bad tag '" + std::string(fields[2]) + "'");
    if (s == tags.size()) tags.emplace_back();
    if (s + 1 != tags.size()) throw fail("sentence index out of order");
    if (t != tags.back().size()) throw fail("token index out of order");
    tags.back().push_back(*tag);
  }
  return tags;
}

CorpusTags read_prediction_tags(const std::filesystem::path& path) {
  return parse_prediction_tags(detail::read_file(path));
}

int cmd_synth(const SynthOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, "synth", [&] {
    const auto corpus = generate(options.config);
    std::filesystem::create_directories(options.out_dir);
    write_token_stream(corpus.train, options.out_dir / "train.ets");
    if (!corpus.dev.empty()) write_token_stream(corpus.dev, options.out_dir / "dev.ets");
    write_token_stream(corpus.test, options.out_dir / "test.ets");
    out << "dataset " << options.config.dataset_id << ": train " << corpus.train.size()
        << " sentences (" << token_count(corpus.train) << " tokens), dev " << corpus.dev.size()
        << ", test " << corpus.test.size() << "\n";
    return 0;
  });
}

int cmd_build(const BuildOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, "build", [&] {
    if (options.inputs.empty()) throw Error(ErrorCode::EmptyInput, "no training files given");
    std::vector<DatasetSplit> splits;
    for (const auto& path : options.inputs) {
      auto stream = read_token_stream_file(path);
      DatasetSplit split;
      split.dataset_id = stream.dataset_id.empty() ? path.stem().string() : stream.dataset_id;
      split.sentences = std::move(stream.sentences);
      for (auto& s : split.sentences) s.dataset_id = split.dataset_id;
      splits.push_back(std::move(split));
    }
    const Datastore store = build_datastore(splits, options.config);
    save_datastore(store, options.out);
    out << "entries " << store.size() << "\n";
    for (const auto& [source, count] : store.source_counts()) {
      out << "  " << source << " " << count << "\n";
    }
    out << "whitening " << (store.whitening() ? "on" : "off") << "\n";
    if (store.has_centroids()) {
      out << "centroids " << store.ncentroids() << " nprobe " << store.config().nprobe << "\n";
    }
    return 0;
  });
}

int cmd_infer(const InferOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, "infer", [&] {
    options.params.validate();
    const Datastore store = load_datastore(options.store);
    const auto sentences =
        read_token_stream(options.input, static_cast<std::uint32_t>(store.dim()));
    const auto predictions = infer_corpus(store, sentences, options.params, options.mode);
    detail::write_file_atomic(options.out, format_predictions(predictions));
    out << "predicted " << token_count(sentences) << " tokens in " << sentences.size()
        << " sentences (" << mode_name(options.mode) << ", k=" << options.params.k
        << ", lambda=" << format_g(options.params.lambda)
        << ", temperature=" << format_g(options.params.temperature) << ")\n";
    return 0;
  });
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, "eval", [&] {
    const auto gold = read_token_stream(options.gold);
    const auto pred = read_prediction_tags(options.pred);
    auto check_aligned = [&](const CorpusTags& tags, const std::filesystem::path& path) {
      bool ok = tags.size() == gold.size();
      for (std::size_t i = 0; ok && i < gold.size(); ++i) ok = tags[i].size() == gold[i].tokens.size();
      if (!ok) throw Error(ErrorCode::DimensionMismatch, path.string() + " is not aligned with the gold file");
    };
    check_aligned(pred, options.pred);

    std::vector<Sentence> train;
    if (options.train) train = read_token_stream(*options.train);
    EvalReport report = evaluate_corpus(gold, pred, options.train ? &train : nullptr);
    out << format_report_table(report);
    auto records = report_records(report);

    if (options.baseline_pred) {
      const auto baseline = read_prediction_tags(*options.baseline_pred);
      check_aligned(baseline, *options.baseline_pred);
      const auto m = corpus_mcnemar(gold, pred, baseline);
      out << "mcnemar b=" << m.b << " c=" << m.c << " statistic " << format_fixed(m.statistic)
          << " p " << format_fixed(m.p_value) << (m.exact ? " (exact binomial)" : " (chi-squared)")
          << (m.degenerate ? " degenerate" : "") << "\n";
      records.push_back({"mcnemar_b", "all", std::to_string(m.b)});
      records.push_back({"mcnemar_c", "all", std::to_string(m.c)});
      records.push_back({"mcnemar_statistic", "all", format_fixed(m.statistic)});
      records.push_back({"mcnemar_p", "all", format_fixed(m.p_value)});
      records.push_back({"mcnemar_degenerate", "all", m.degenerate ? "1" : "0"});
    }
    write_records(options.records, records);
    return 0;
  });
}

std::vector<MetricRecord> sweep_records(const SweepResult& result) {
  std::vector<MetricRecord> records;
  records.reserve(result.grid.size());
  for (const auto& p : result.grid) {
    records.push_back({"f1",
                       "k=" + std::to_string(p.params.k) + ",lambda=" + format_g(p.params.lambda) +
                           ",temperature=" + format_g(p.params.temperature),
                       format_fixed(p.f1)});
  }
  return records;
}

int cmd_sweep(const SweepOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, "sweep", [&] {
    const Datastore store = load_datastore(options.store);
    const auto dev = read_token_stream(options.dev, static_cast<std::uint32_t>(store.dim()));
    const auto result = run_sweep(store, dev, options.space);
    const auto records = sweep_records(result);
    if (options.records) {
      write_records(options.records, records);
    } else {
      out << format_records(records);
    }
    out << "best k=" << result.best.params.k << " lambda=" << format_g(result.best.params.lambda)
        << " temperature=" << format_g(result.best.params.temperature)
        << " f1=" << format_fixed(result.best.f1) << "\n";
    return 0;
  });
}

std::vector<MetricRecord> crossmatrix_records(const CrossMatrix& matrix) {
  std::vector<MetricRecord> records;
  const auto& ds = matrix.datasets;
  for (const char* system : {"vanilla", "fused"}) {
    for (std::size_t a = 0; a < ds.size(); ++a) {
      for (std::size_t b = 0; b < ds.size(); ++b) {
        const auto& cell = matrix.cells[a][b];
        std::string value = "absent";
        if (cell) value = format_fixed(std::string_view(system) == "vanilla" ? cell->vanilla_f1 : cell->fused_f1);
        records.push_back({"f1", std::string("system=") + system + ",train=" + ds[a] + ",eval=" + ds[b], value});
      }
    }
  }
  return records;
}

std::string format_crossmatrix_table(const CrossMatrix& matrix) {
  std::ostringstream os;
  const auto& ds = matrix.datasets;
  for (const char* system : {"vanilla", "fused"}) {
    os << system << " span-F1 (rows: train, columns: eval, * diagonal)\n";
    char cell_buf[48];
    std::snprintf(cell_buf, sizeof(cell_buf), "%-14s", "");
    os << cell_buf;
    for (const auto& d : ds) {
      std::snprintf(cell_buf, sizeof(cell_buf), "%14s", d.c_str());
      os << cell_buf;
    }
    os << "\n";
    for (std::size_t a = 0; a < ds.size(); ++a) {
      std::snprintf(cell_buf, sizeof(cell_buf), "%-14s", ds[a].c_str());
      os << cell_buf;
      for (std::size_t b = 0; b < ds.size(); ++b) {
        const auto& cell = matrix.cells[a][b];
        std::string text = "absent";
        if (cell) {
          text = format_fixed(100.0 * (std::string_view(system) == "vanilla" ? cell->vanilla_f1 : cell->fused_f1), 2);
        }
        if (a == b) text += "*";
        std::snprintf(cell_buf, sizeof(cell_buf), "%14s", text.c_str());
        os << cell_buf;
      }
      os << "\n";
    }
  }
  return os.str();
}

int cmd_crossmatrix(const CrossMatrixOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, "crossmatrix", [&] {
    if (options.datasets.empty()) throw Error(ErrorCode::EmptyInput, "no datasets given");
    CrossParams params;
    if (options.params) params = parse_cross_params(read_kv_file(*options.params));
    const auto matrix = run_crossmatrix(options.stores_dir, options.datasets, params);
    out << format_crossmatrix_table(matrix);
    write_records(options.records, crossmatrix_records(matrix));
    return 0;
  });
}

int cmd_provenance(const ProvenanceOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, "provenance", [&] {
    const Datastore store = load_datastore(options.store);
    const auto sentences =
        read_token_stream(options.input, static_cast<std::uint32_t>(store.dim()));
    std::vector<Embedding> queries;
    queries.reserve(token_count(sentences));
    for (const auto& s : sentences) {
      for (const auto& t : s.tokens) queries.push_back(t.embedding);
    }
    EvalReport report;
    report.provenance = provenance_counts(store, queries, options.k, options.mode);
    std::uint64_t total = 0;
    for (const auto& [source, count] : *report.provenance) total += count;
    out << "retrieved " << total << " neighbors for " << queries.size() << " queries\n";
    for (const auto& [source, count] : *report.provenance) {
      out << "  " << source << " " << count << "\n";
    }
    std::vector<MetricRecord> records;
    for (const auto& [source, count] : *report.provenance) {
      records.push_back({"retrieved", "source=" + source, std::to_string(count)});
    }
    write_records(options.records, records);
    return 0;
  });
}

}  // namespace nnose
