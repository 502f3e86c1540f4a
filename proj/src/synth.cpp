#include "nnose/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nnose/error.hpp"
#include "nnose/rng.hpp"

namespace nnose {
namespace {

// Geometry constants. Skill centroids sit far from the unit background so
// that label structure is recoverable by retrieval at moderate spreads.
constexpr double kCentroidScale = 4.0;
constexpr double kLabelOffsetNorm = 2.5;
constexpr std::size_t kMaxSkillLength = 3;
constexpr std::size_t kBackgroundVocab = 500;

Embedding gaussian(Rng& rng, std::size_t dim, double scale) {
  Embedding v(dim);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

Embedding unit_direction(Rng& rng, std::size_t dim, double norm) {
  Embedding v = gaussian(rng, dim, 1.0);
  double len = 0.0;
  for (double x : v) len += x * x;
  len = std::sqrt(len);
  for (auto& x : v) x *= norm / len;
  return v;
}

Distribution3 base_distribution(LabelTag gold, double base_noise, Rng& noise) {
  if (noise.uniform() >= base_noise) return Distribution3::one_hot(gold);
  // Wrong argmax: pick one of the two other labels and give it more mass
  // than the gold label before renormalizing.
  const std::size_t g = ordinal(gold);
  const std::size_t wrong = (g + 1 + noise.below(2)) % kNumLabels;
  const double boost = 1.5 + 2.0 * noise.uniform();
  Distribution3 d;
  d.p[g] = 1.0 / (1.0 + boost);
  d.p[wrong] = boost / (1.0 + boost);
  return d;
}

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void SynthConfig::validate() const {
  if (dim == 0 || n_train_sentences == 0 || n_test_sentences == 0 || tokens_per_sentence == 0 ||
      skill_vocab_size == 0) {
    throw Error(ErrorCode::InvalidArgument, "synth counts must be positive");
  }
  if (!(cluster_spread >= 0.0) || !std::isfinite(cluster_spread)) {
    throw Error(ErrorCode::InvalidArgument, "cluster_spread must be non-negative");
  }
  if (!(base_noise >= 0.0 && base_noise <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "base_noise must lie in [0,1]");
  }
  if (!(zipf_exponent > 0.0)) throw Error(ErrorCode::InvalidArgument, "zipf_exponent must be positive");
  if (!(skill_rate >= 0.0 && skill_rate <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "skill_rate must lie in [0,1]");
  }
}

std::string SynthWorld::skill_token_text(std::size_t skill, std::size_t position) const {
  return config.dataset_id + "_skill" + std::to_string(skill) + "_" + std::to_string(position);
}

SynthWorld make_world(const SynthConfig& config) {
  config.validate();
  SynthWorld world;
  world.config = config;
  Rng rng(mix(config.seed));
  world.begin_offset = unit_direction(rng, config.dim, kLabelOffsetNorm);
  world.inside_offset = unit_direction(rng, config.dim, kLabelOffsetNorm);
  world.skill_centroids.reserve(config.skill_vocab_size);
  world.skill_lengths.reserve(config.skill_vocab_size);
  for (std::size_t s = 0; s < config.skill_vocab_size; ++s) {
    world.skill_centroids.push_back(gaussian(rng, config.dim, kCentroidScale));
    world.skill_lengths.push_back(1 + rng.below(kMaxSkillLength));
  }
  double total = 0.0;
  world.zipf_cdf.reserve(config.skill_vocab_size);
  for (std::size_t r = 1; r <= config.skill_vocab_size; ++r) {
    total += std::pow(static_cast<double>(r), -config.zipf_exponent);
    world.zipf_cdf.push_back(total);
  }
  for (auto& c : world.zipf_cdf) c /= total;
  return world;
}

std::vector<Sentence> sample_sentences(const SynthWorld& world, std::size_t n,
                                       std::uint64_t content_seed, double base_noise,
                                       std::uint64_t noise_seed) {
  const auto& cfg = world.config;
  Rng rng(content_seed);
  Rng noise(noise_seed);
  std::vector<Sentence> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    Sentence sentence;
    sentence.dataset_id = cfg.dataset_id;
    std::size_t pos = 0;
    while (pos < cfg.tokens_per_sentence) {
      const bool start_skill = rng.uniform() < cfg.skill_rate;
      std::size_t skill = 0;
      if (start_skill) {
        const double u = rng.uniform();
        skill = static_cast<std::size_t>(
            std::upper_bound(world.zipf_cdf.begin(), world.zipf_cdf.end(), u) - world.zipf_cdf.begin());
        skill = std::min(skill, cfg.skill_vocab_size - 1);
      }
      if (start_skill && pos + world.skill_lengths[skill] <= cfg.tokens_per_sentence) {
        for (std::size_t j = 0; j < world.skill_lengths[skill]; ++j) {
          TokenRecord tok;
          tok.text = world.skill_token_text(skill, j);
          tok.gold = j == 0 ? LabelTag::B : LabelTag::I;
          const auto& offset = j == 0 ? world.begin_offset : world.inside_offset;
          tok.embedding.resize(cfg.dim);
          for (std::size_t d = 0; d < cfg.dim; ++d) {
            tok.embedding[d] =
                world.skill_centroids[skill][d] + offset[d] + cfg.cluster_spread * rng.normal();
          }
          tok.base = base_distribution(tok.gold, base_noise, noise);
          sentence.tokens.push_back(std::move(tok));
        }
        pos += world.skill_lengths[skill];
      } else {
        TokenRecord tok;
        tok.text = "w" + std::to_string(rng.below(kBackgroundVocab));
        tok.gold = LabelTag::O;
        tok.embedding = gaussian(rng, cfg.dim, 1.0);
        tok.base = base_distribution(tok.gold, base_noise, noise);
        sentence.tokens.push_back(std::move(tok));
        ++pos;
      }
    }
    out.push_back(std::move(sentence));
  }
  return out;
}

std::uint64_t split_seed(std::uint64_t seed, int split, bool noise) {
  return mix(mix(seed) + static_cast<std::uint64_t>(2 * split + (noise ? 1 : 0) + 1));
}

SynthCorpus generate(const SynthConfig& config) {
  const SynthWorld world = make_world(config);
  SynthCorpus corpus;
  corpus.train = sample_sentences(world, config.n_train_sentences, split_seed(config.seed, 0, false),
                                  config.base_noise, split_seed(config.seed, 0, true));
  corpus.dev = sample_sentences(world, config.n_dev_sentences, split_seed(config.seed, 1, false),
                                config.base_noise, split_seed(config.seed, 1, true));
  corpus.test = sample_sentences(world, config.n_test_sentences, split_seed(config.seed, 2, false),
                                 config.base_noise, split_seed(config.seed, 2, true));
  return corpus;
}

void apply_synth_setting(SynthConfig& config, const std::string& key, const std::string& value) {
  auto as_size = [&] {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty() || value[0] == '-') {
      throw Error(ErrorCode::InvalidArgument, key + ": expected a non-negative integer, got '" + value + "'");
    }
    return static_cast<std::size_t>(v);
  };
  auto as_real = [&] {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size() || value.empty()) {
      throw Error(ErrorCode::InvalidArgument, key + ": expected a number, got '" + value + "'");
    }
    return v;
  };
  if (key == "dim") config.dim = as_size();
  else if (key == "n_train_sentences") config.n_train_sentences = as_size();
  else if (key == "n_dev_sentences") config.n_dev_sentences = as_size();
  else if (key == "n_test_sentences") config.n_test_sentences = as_size();
  else if (key == "tokens_per_sentence") config.tokens_per_sentence = as_size();
  else if (key == "cluster_spread") config.cluster_spread = as_real();
  else if (key == "base_noise") config.base_noise = as_real();
  else if (key == "skill_vocab_size") config.skill_vocab_size = as_size();
  else if (key == "zipf_exponent") config.zipf_exponent = as_real();
  else if (key == "skill_rate") config.skill_rate = as_real();
  else if (key == "seed") config.seed = as_size();
  else if (key == "dataset_id") config.dataset_id = value;
  else throw Error(ErrorCode::InvalidArgument, "unknown synth setting '" + key + "'");
}

}  // namespace nnose
