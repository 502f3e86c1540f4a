#include "nnose/evaluation.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <tuple>

#include "nnose/error.hpp"

namespace nnose {
namespace {

using SpanKey = std::tuple<std::size_t, std::size_t, std::size_t>;

SpanKey key_of(const Span& s) { return {s.sentence_index, s.start, s.end}; }

double safe_ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::string normalize_surface(std::span<const std::string> texts) {
  std::string out;
  bool pending_space = false;
  for (const auto& text : texts) {
    pending_space = !out.empty();
    for (char ch : text) {
      const auto u = static_cast<unsigned char>(ch);
      if (std::isspace(u)) {
        pending_space = !out.empty();
        continue;
      }
      if (pending_space) {
        out.push_back(' ');
        pending_space = false;
      }
      out.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  return out;
}

std::vector<Span> extract_spans(std::span<const LabelTag> tags, std::span<const std::string> texts,
                                std::size_t sentence_index) {
  if (tags.size() != texts.size()) {
    throw Error(ErrorCode::DimensionMismatch, std::to_string(tags.size()) + " tags vs " +
                                                  std::to_string(texts.size()) + " texts");
  }
  std::vector<Span> spans;
  auto close = [&](std::size_t start, std::size_t end) {
    spans.push_back(Span{sentence_index, start, end, normalize_surface(texts.subspan(start, end - start + 1))});
  };
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t open = kNone;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    switch (tags[i]) {
      case LabelTag::B:
        if (open != kNone) close(open, i - 1);
        open = i;
        break;
      case LabelTag::I:
        if (open == kNone) {
          throw Error(ErrorCode::UnrepairedSequence,
                      "I without preceding B at token " + std::to_string(i));
        }
        break;
      case LabelTag::O:
        if (open != kNone) close(open, i - 1);
        open = kNone;
        break;
    }
  }
  if (open != kNone) close(open, tags.size() - 1);
  return spans;
}

std::string_view bin_name(FrequencyBin bin) {
  switch (bin) {
    case FrequencyBin::Low: return "low";
    case FrequencyBin::MidLow: return "mid_low";
    case FrequencyBin::MidHigh: return "mid_high";
    case FrequencyBin::High: return "high";
  }
  return "unknown";
}

FrequencyBin bin_for_count(std::uint64_t count) {
  if (count < 4) return FrequencyBin::Low;
  if (count < 7) return FrequencyBin::MidLow;
  if (count < 10) return FrequencyBin::MidHigh;
  return FrequencyBin::High;
}

SurfaceCounts count_surfaces(std::span<const Span> spans) {
  SurfaceCounts counts;
  for (const auto& s : spans) ++counts[s.surface];
  return counts;
}

std::vector<FrequencyBin> frequency_bins(const SurfaceCounts& train, std::span<const Span> spans) {
  std::vector<FrequencyBin> bins;
  bins.reserve(spans.size());
  for (const auto& s : spans) {
    const auto it = train.find(s.surface);
    bins.push_back(bin_for_count(it == train.end() ? 0 : it->second));
  }
  return bins;
}

double f1_score(double precision, double recall) {
  const double denom = precision + recall;
  return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

EvalReport span_scores(std::span<const Span> gold, std::span<const Span> pred) {
  std::set<SpanKey> gold_keys;
  for (const auto& s : gold) gold_keys.insert(key_of(s));
  std::set<SpanKey> pred_keys;
  for (const auto& s : pred) pred_keys.insert(key_of(s));

  EvalReport r;
  for (const auto& k : pred_keys) {
    if (gold_keys.count(k)) ++r.tp;
  }
  r.fp = pred_keys.size() - r.tp;
  r.fn = gold_keys.size() - r.tp;
  r.precision = safe_ratio(r.tp, pred_keys.size());
  r.recall = safe_ratio(r.tp, gold_keys.size());
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

std::map<FrequencyBin, BinScore> per_bin_scores(std::span<const Span> gold,
                                                std::span<const FrequencyBin> gold_bins,
                                                std::span<const Span> pred,
                                                std::span<const FrequencyBin> pred_bins) {
  if (gold.size() != gold_bins.size() || pred.size() != pred_bins.size()) {
    throw Error(ErrorCode::DimensionMismatch, "bin assignment not parallel to spans");
  }
  std::map<FrequencyBin, BinScore> out;
  for (auto bin : kAllBins) {
    std::vector<Span> g;
    std::vector<Span> p;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (gold_bins[i] == bin) g.push_back(gold[i]);
    }
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (pred_bins[i] == bin) p.push_back(pred[i]);
    }
    const auto r = span_scores(g, p);
    BinScore score;
    score.precision = r.precision;
    score.recall = r.recall;
    score.f1 = r.f1;
    score.tp = r.tp;
    score.gold_count = r.tp + r.fn;
    score.predicted_count = r.tp + r.fp;
    out[bin] = score;
  }
  return out;
}

std::map<FrequencyBin, BinScore> per_bin_f1(std::span<const Span> gold, std::span<const Span> pred,
                                            const SurfaceCounts& train) {
  const auto gold_bins = frequency_bins(train, gold);
  const auto pred_bins = frequency_bins(train, pred);
  return per_bin_scores(gold, gold_bins, pred, pred_bins);
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t inter = 0;
  for (const auto& s : a) {
    if (b.count(s)) ++inter;
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double chi2_1dof_sf(double x) {
  if (x <= 0.0) return 1.0;
  return std::erfc(std::sqrt(x / 2.0));
}

double binomial_two_sided_half(std::size_t successes, std::size_t n) {
  if (n == 0) return 1.0;
  const std::size_t tail = std::min(successes, n - successes);
  // log-space terms keep this usable for large n as well.
  const double log_half_n = -static_cast<double>(n) * std::log(2.0);
  double acc = 0.0;
  for (std::size_t i = 0; i <= tail; ++i) {
    const double log_choose = std::lgamma(static_cast<double>(n) + 1.0) -
                              std::lgamma(static_cast<double>(i) + 1.0) -
                              std::lgamma(static_cast<double>(n - i) + 1.0);
    acc += std::exp(log_choose + log_half_n);
  }
  return std::min(1.0, 2.0 * acc);
}

McNemarResult mcnemar_from_counts(std::size_t b, std::size_t c) {
  McNemarResult r;
  r.b = b;
  r.c = c;
  const std::size_t n = b + c;
  if (n == 0) {
    r.degenerate = true;
    r.p_value = 1.0;
    r.statistic = 0.0;
    return r;
  }
  const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
  r.statistic = diff * diff / static_cast<double>(n);
  if (n < kMcNemarExactBelow) {
    r.exact = true;
    r.p_value = binomial_two_sided_half(b, n);
  } else {
    r.p_value = chi2_1dof_sf(r.statistic);
  }
  return r;
}

McNemarResult mcnemar_token(std::span<const LabelTag> tags_a, std::span<const LabelTag> tags_b,
                            std::span<const LabelTag> gold) {
  if (tags_a.size() != gold.size() || tags_b.size() != gold.size()) {
    throw Error(ErrorCode::DimensionMismatch, "McNemar inputs differ in length");
  }
  std::size_t b = 0;
  std::size_t c = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool a_ok = tags_a[i] == gold[i];
    const bool b_ok = tags_b[i] == gold[i];
    if (a_ok && !b_ok) ++b;
    if (!a_ok && b_ok) ++c;
  }
  return mcnemar_from_counts(b, c);
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::vector<MetricRecord> report_records(const EvalReport& report) {
  std::vector<MetricRecord> out;
  out.push_back({"precision", "all", format_fixed(report.precision)});
  out.push_back({"recall", "all", format_fixed(report.recall)});
  out.push_back({"f1", "all", format_fixed(report.f1)});
  out.push_back({"tp", "all", std::to_string(report.tp)});
  out.push_back({"fp", "all", std::to_string(report.fp)});
  out.push_back({"fn", "all", std::to_string(report.fn)});
  for (const auto& [bin, score] : report.per_bin) {
    const std::string slice = "bin=" + std::string(bin_name(bin));
    out.push_back({"f1", slice, format_fixed(score.f1)});
    out.push_back({"predicted", slice, std::to_string(score.predicted_count)});
    out.push_back({"gold", slice, std::to_string(score.gold_count)});
  }
  if (report.provenance) {
    for (const auto& [source, count] : *report.provenance) {
      out.push_back({"retrieved", "source=" + source, std::to_string(count)});
    }
  }
  return out;
}

std::string format_records(std::span<const MetricRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += r.name;
    out += '\t';
    out += r.slice;
    out += '\t';
    out += r.value;
    out += '\n';
  }
  return out;
}

std::string format_report_table(const EvalReport& report) {
  std::ostringstream os;
  os << "span precision " << format_fixed(report.precision, 4) << "  recall "
     << format_fixed(report.recall, 4) << "  f1 " << format_fixed(report.f1, 4) << "  (tp "
     << report.tp << ", fp " << report.fp << ", fn " << report.fn << ")\n";
  if (!report.per_bin.empty()) {
    os << "bin        f1      predicted  gold\n";
    for (const auto& [bin, score] : report.per_bin) {
      char line[96];
      std::snprintf(line, sizeof(line), "%-10s %.4f  %9zu  %4zu\n", std::string(bin_name(bin)).c_str(),
                    score.f1, score.predicted_count, score.gold_count);
      os << line;
    }
  }
  if (report.provenance) {
    os << "retrieved-from\n";
    for (const auto& [source, count] : *report.provenance) os << "  " << source << "  " << count << "\n";
  }
  return os.str();
}

}  // namespace nnose
