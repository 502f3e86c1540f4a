#pragma once

// Fixtures shared by the unit and acceptance suites.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nnose/rng.hpp"
#include "nnose/synth.hpp"
#include "nnose/types.hpp"

namespace nnose::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::filesystem::path& path);

/// Random f32-representable embedding entries.
Embedding random_embedding(Rng& rng, std::size_t dim, double scale = 1.0);

/// Entries are multiples of 2^-16 summing to exactly 1, so they survive the
/// f32 round trip untouched.
Distribution3 random_dyadic_distribution(Rng& rng);

std::vector<Sentence> random_sentences(Rng& rng, std::size_t count, std::size_t dim,
                                       const std::string& dataset_id, std::size_t max_tokens = 6);

/// Flat row-major buffer of n random Gaussian points.
std::vector<Embedding> random_points(Rng& rng, std::size_t n, std::size_t dim, double scale = 1.0);

/// Two-dataset cross-domain layout for run_crossmatrix: every model's
/// store holds all training splits; a model's view of its own test set has
/// `in_domain_noise` base corruption, other test sets `shift_noise`.
struct CrossLayoutConfig {
  std::vector<std::string> datasets{"alpha", "beta"};
  std::size_t n_train_sentences = 600;
  std::size_t n_test_sentences = 200;
  double in_domain_noise = 0.2;
  double shift_noise = 0.5;
  std::uint32_t ncentroids = 64;
  std::uint64_t seed = 7;
};

void write_cross_layout(const std::filesystem::path& dir, const CrossLayoutConfig& config);

}  // namespace nnose::testing
