#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nnose {

/// BIO tag. The ordinal values are part of every on-disk format and must
/// never change: O=0, B=1, I=2.
enum class LabelTag : std::uint8_t { O = 0, B = 1, I = 2 };

inline constexpr std::size_t kNumLabels = 3;
inline constexpr std::array<LabelTag, kNumLabels> kAllLabels{LabelTag::O, LabelTag::B,
                                                            LabelTag::I};

constexpr std::size_t ordinal(LabelTag tag) { return static_cast<std::size_t>(tag); }

std::optional<LabelTag> label_from_ordinal(std::uint8_t value);
std::optional<LabelTag> parse_label(std::string_view text);
char label_char(LabelTag tag);

/// Contextual token embedding, kept in double precision in memory.
using Embedding = std::vector<double>;

/// A probability distribution over {O, B, I}, indexed by label ordinal.
struct Distribution3 {
  std::array<double, kNumLabels> p{};

  double& operator[](LabelTag tag) { return p[ordinal(tag)]; }
  double operator[](LabelTag tag) const { return p[ordinal(tag)]; }

  double sum() const { return p[0] + p[1] + p[2]; }

  /// Highest-probability label; exact ties go to the lowest ordinal.
  LabelTag argmax() const;

  static Distribution3 one_hot(LabelTag tag);

  bool operator==(const Distribution3&) const = default;
};

/// True when every entry is in [0,1] and the entries sum to 1 within tol.
bool is_distribution(const Distribution3& d, double tol = 1e-6);

struct TokenRecord {
  std::string text;
  LabelTag gold = LabelTag::O;
  Embedding embedding;
  Distribution3 base;

  bool operator==(const TokenRecord&) const = default;
};

struct Sentence {
  std::vector<TokenRecord> tokens;
  std::string dataset_id;

  bool operator==(const Sentence&) const = default;
};

std::vector<LabelTag> gold_tags(const Sentence& sentence);
std::vector<std::string> token_texts(const Sentence& sentence);
std::size_t token_count(const std::vector<Sentence>& sentences);

}  // namespace nnose
