#pragma once

// Key-value datastore of whitened token embeddings and their gold BIO tags,
// with an exact scan and an inverted-file (k-means partitioned) search.
//
// NDS1 file layout, little-endian:
//   "NDS1" | version u32 | flags u32 (bit0 whitening, bit1 centroids)
//   | dim u32 | entry count u64
//   | config: use_whitening u8, ncentroids u32, nprobe u32, kmeans_iters u32, seed u64
//   | source table: count u16, then per source length u16 + UTF-8 bytes
//   | whitening (if flagged): mean dim x f32, W dim*dim x f32 row-major
//   | entries: key dim x f32, value u8, source index u16, sentence u32, token u32
//   | centroids (if flagged): ncentroids u32, ncentroids*dim x f32,
//     then per centroid member count u64 + member entry indices u64

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nnose/types.hpp"
#include "nnose/whitening.hpp"

namespace nnose {

inline constexpr std::uint32_t kDatastoreVersion = 1;

struct DatastoreConfig {
  bool use_whitening = true;
  std::uint32_t ncentroids = 4096;  // clamped to max(1, N/4) at build time
  std::uint32_t nprobe = 32;        // clamped to ncentroids
  std::uint32_t kmeans_iters = 25;
  std::uint64_t seed = 0;
  bool build_index = true;  // false skips centroid training (exact search only)

  bool operator==(const DatastoreConfig&) const = default;
};

struct TokenPosition {
  std::uint32_t sentence = 0;
  std::uint32_t token = 0;
  bool operator==(const TokenPosition&) const = default;
};

struct Neighbor {
  std::size_t entry_index = 0;
  double distance = 0.0;  // squared L2 in (whitened) key space
  LabelTag value = LabelTag::O;
  std::string source;

  bool operator==(const Neighbor&) const = default;
};

enum class SearchMode { Exact, Clustered };

/// One training split contributed to the store, tagged with its dataset id.
struct DatasetSplit {
  std::string dataset_id;
  std::vector<Sentence> sentences;
};

class Datastore {
 public:
  std::size_t size() const { return values_.size(); }
  std::size_t dim() const { return dim_; }
  const DatastoreConfig& config() const { return config_; }
  const std::optional<WhiteningModel>& whitening() const { return whitening_; }

  std::span<const float> key(std::size_t i) const {
    return std::span<const float>(keys_).subspan(i * dim_, dim_);
  }
  LabelTag value(std::size_t i) const { return values_[i]; }
  const std::string& source(std::size_t i) const { return sources_[source_index_[i]]; }
  TokenPosition position(std::size_t i) const { return positions_[i]; }
  const std::vector<std::string>& sources() const { return sources_; }

  bool has_centroids() const { return ncentroids_ > 0; }
  std::size_t ncentroids() const { return ncentroids_; }
  std::span<const float> centroid(std::size_t c) const {
    return std::span<const float>(centroids_).subspan(c * dim_, dim_);
  }
  const std::vector<std::uint64_t>& members(std::size_t c) const { return lists_[c]; }

  /// Maps a raw query into key space (identity copy without whitening).
  Embedding prepare_query(std::span<const double> raw) const;

  /// Entry counts per source dataset id.
  std::map<std::string, std::uint64_t> source_counts() const;

  bool operator==(const Datastore&) const = default;

 private:
  friend Datastore build_datastore(std::span<const DatasetSplit>, const DatastoreConfig&);
  friend Datastore decode_datastore(std::string_view);
  friend std::string encode_datastore(const Datastore&);

  DatastoreConfig config_;
  std::size_t dim_ = 0;
  std::optional<WhiteningModel> whitening_;
  std::vector<float> keys_;
  std::vector<LabelTag> values_;
  std::vector<std::uint16_t> source_index_;
  std::vector<std::string> sources_;
  std::vector<TokenPosition> positions_;
  std::size_t ncentroids_ = 0;
  std::vector<float> centroids_;
  std::vector<std::vector<std::uint64_t>> lists_;
};

/// Stores every token of every split (O tags included). With whitening on,
/// the model is fitted on the union of all incoming keys; the model and keys
/// are held at f32 precision so a saved store reloads bit-identically.
Datastore build_datastore(std::span<const DatasetSplit> splits, const DatastoreConfig& config);

/// k nearest entries to a RAW query (whitened internally), ascending by
/// distance with ties to the lower entry index. Returns min(k, N) neighbors.
std::vector<Neighbor> exact_search(const Datastore& store, std::span<const double> query,
                                   std::size_t k);

/// Scans the member lists of the nprobe centroids nearest to the whitened
/// query. Ordering and tie rules match exact_search.
std::vector<Neighbor> clustered_search(const Datastore& store, std::span<const double> query,
                                       std::size_t k);

std::vector<Neighbor> search(const Datastore& store, std::span<const double> query,
                             std::size_t k, SearchMode mode);

/// Tally of retrieved-neighbor source ids over all queries. Every source in
/// the store appears in the map, with zero when never retrieved.
std::map<std::string, std::uint64_t> provenance_counts(const Datastore& store,
                                                       std::span<const Embedding> queries,
                                                       std::size_t k,
                                                       SearchMode mode = SearchMode::Clustered);

std::string encode_datastore(const Datastore& store);
Datastore decode_datastore(std::string_view bytes);
void save_datastore(const Datastore& store, const std::filesystem::path& path);
Datastore load_datastore(const std::filesystem::path& path);

}  // namespace nnose
