#include "nnose/types.hpp"

#include <cmath>

namespace nnose {

std::optional<LabelTag> label_from_ordinal(std::uint8_t value) {
  if (value >= kNumLabels) return std::nullopt;
  return static_cast<LabelTag>(value);
}

std::optional<LabelTag> parse_label(std::string_view text) {
  if (text == "O") return LabelTag::O;
  if (text == "B") return LabelTag::B;
  if (text == "I") return LabelTag::I;
  return std::nullopt;
}

char label_char(LabelTag tag) {
  switch (tag) {
    case LabelTag::O: return 'O';
    case LabelTag::B: return 'B';
    case LabelTag::I: return 'I';
  }
  return '?';
}

LabelTag Distribution3::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumLabels; ++i) {
    if (p[i] > p[best]) best = i;
  }
  return static_cast<LabelTag>(best);
}

Distribution3 Distribution3::one_hot(LabelTag tag) {
  Distribution3 d;
  d[tag] = 1.0;
  return d;
}

bool is_distribution(const Distribution3& d, double tol) {
  for (double v : d.p) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) return false;
  }
  return std::abs(d.sum() - 1.0) <= tol;
}

std::vector<LabelTag> gold_tags(const Sentence& sentence) {
  std::vector<LabelTag> tags;
  tags.reserve(sentence.tokens.size());
  for (const auto& t : sentence.tokens) tags.push_back(t.gold);
  return tags;
}

std::vector<std::string> token_texts(const Sentence& sentence) {
  std::vector<std::string> texts;
  texts.reserve(sentence.tokens.size());
  for (const auto& t : sentence.tokens) texts.push_back(t.text);
  return texts;
}

std::size_t token_count(const std::vector<Sentence>& sentences) {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.tokens.size();
  return n;
}

}  // namespace nnose
