#pragma once

// Seeded synthetic corpus: Zipf-distributed skill types, each with its own
// Gaussian embedding centroid, O tokens from a shared background Gaussian at
// the origin, and base distributions corrupted with a controllable rate.

#include <cstdint>
#include <string>
#include <vector>

#include "nnose/types.hpp"

namespace nnose {

struct SynthConfig {
  std::size_t dim = 16;
  std::size_t n_train_sentences = 2000;
  std::size_t n_dev_sentences = 250;
  std::size_t n_test_sentences = 500;
  std::size_t tokens_per_sentence = 12;
  double cluster_spread = 0.5;
  double base_noise = 0.3;  // probability a token's base argmax is wrong
  std::size_t skill_vocab_size = 200;
  double zipf_exponent = 1.5;
  double skill_rate = 0.12;  // chance a skill starts at a free position
  std::uint64_t seed = 1;
  std::string dataset_id = "synth";

  /// Throws InvalidArgument on a zero count or an out-of-range real.
  void validate() const;
};

/// Everything fixed by the config seed: skill centroids, label offsets,
/// skill lengths and the Zipf table.
struct SynthWorld {
  SynthConfig config;
  std::vector<Embedding> skill_centroids;
  std::vector<std::size_t> skill_lengths;
  Embedding begin_offset;
  Embedding inside_offset;
  std::vector<double> zipf_cdf;

  std::string skill_token_text(std::size_t skill, std::size_t position) const;
};

SynthWorld make_world(const SynthConfig& config);

/// Samples `n` sentences. `content_seed` fixes texts, tags and embeddings;
/// `noise_seed` fixes only base-distribution corruption, so the same content
/// can be re-issued under a different base noise level.
std::vector<Sentence> sample_sentences(const SynthWorld& world, std::size_t n,
                                       std::uint64_t content_seed, double base_noise,
                                       std::uint64_t noise_seed);

struct SynthCorpus {
  std::vector<Sentence> train;
  std::vector<Sentence> dev;
  std::vector<Sentence> test;
};

/// Derived split seeds, exposed so callers can regenerate a split's content.
std::uint64_t split_seed(std::uint64_t seed, int split, bool noise);

SynthCorpus generate(const SynthConfig& config);

/// Sets one field from its key=value spelling; unknown keys or bad values
/// raise InvalidArgument.
void apply_synth_setting(SynthConfig& config, const std::string& key, const std::string& value);

}  // namespace nnose
