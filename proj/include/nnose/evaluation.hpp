#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nnose/types.hpp"

namespace nnose {

struct Span {
  std::size_t sentence_index = 0;
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // inclusive
  std::string surface;    // lowercased, single-space-joined token texts

  bool operator==(const Span&) const = default;
};

/// Lowercases (ASCII) and collapses all whitespace runs to one space.
std::string normalize_surface(std::span<const std::string> texts);

/// Maximal B I* runs. Throws UnrepairedSequence for an I after O or at the
/// start, DimensionMismatch when the two sequences differ in length.
std::vector<Span> extract_spans(std::span<const LabelTag> tags, std::span<const std::string> texts,
                                std::size_t sentence_index = 0);

enum class FrequencyBin : std::uint8_t { Low = 0, MidLow = 1, MidHigh = 2, High = 3 };
inline constexpr std::array<FrequencyBin, 4> kAllBins{FrequencyBin::Low, FrequencyBin::MidLow,
                                                     FrequencyBin::MidHigh, FrequencyBin::High};

std::string_view bin_name(FrequencyBin bin);

/// Half-open bins on the training count: low [0,4), mid_low [4,7),
/// mid_high [7,10), high [10,inf). Counts of 16 and above fold into high.
FrequencyBin bin_for_count(std::uint64_t count);

using SurfaceCounts = std::unordered_map<std::string, std::uint64_t>;

SurfaceCounts count_surfaces(std::span<const Span> spans);

/// Bin of each span, parallel to `spans`.
std::vector<FrequencyBin> frequency_bins(const SurfaceCounts& train, std::span<const Span> spans);

struct BinScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t gold_count = 0;
  std::size_t predicted_count = 0;

  bool operator==(const BinScore&) const = default;
};

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::map<FrequencyBin, BinScore> per_bin;
  std::optional<std::map<std::string, std::uint64_t>> provenance;
};

/// Exact-position matching on (sentence_index, start, end); duplicates on
/// either side count once.
EvalReport span_scores(std::span<const Span> gold, std::span<const Span> pred);

double f1_score(double precision, double recall);

/// Scores restricted to each bin. A pair can only match when both sides
/// landed in the same bin. All four bins are always present.
std::map<FrequencyBin, BinScore> per_bin_scores(std::span<const Span> gold,
                                                std::span<const FrequencyBin> gold_bins,
                                                std::span<const Span> pred,
                                                std::span<const FrequencyBin> pred_bins);

/// Bins each side by its own surface's training frequency, then scores.
std::map<FrequencyBin, BinScore> per_bin_f1(std::span<const Span> gold, std::span<const Span> pred,
                                            const SurfaceCounts& train);

/// |A ∩ B| / |A ∪ B|, with J(∅, ∅) = 0.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

struct McNemarResult {
  std::size_t b = 0;  // A correct, B wrong
  std::size_t c = 0;  // A wrong, B correct
  double statistic = 0.0;  // (|b - c| - 1)^2 / (b + c)
  double p_value = 1.0;
  bool exact = false;       // exact binomial path (b + c < 25)
  bool degenerate = false;  // b + c == 0
};

inline constexpr std::size_t kMcNemarExactBelow = 25;

McNemarResult mcnemar_from_counts(std::size_t b, std::size_t c);

/// Token-level paired test between two aligned tag sequences against gold.
McNemarResult mcnemar_token(std::span<const LabelTag> tags_a, std::span<const LabelTag> tags_b,
                            std::span<const LabelTag> gold);

/// Survival function of chi-squared with one degree of freedom.
double chi2_1dof_sf(double x);

/// Two-sided exact binomial p-value with success probability 1/2.
double binomial_two_sided_half(std::size_t successes, std::size_t n);

struct MetricRecord {
  std::string name;
  std::string slice;
  std::string value;
};

/// One record per metric in a fixed order: global metrics, then each bin,
/// then provenance counts when present.
std::vector<MetricRecord> report_records(const EvalReport& report);

/// name<TAB>slice<TAB>value, one record per line.
std::string format_records(std::span<const MetricRecord> records);

std::string format_report_table(const EvalReport& report);

std::string format_fixed(double value, int decimals = 6);

}  // namespace nnose
