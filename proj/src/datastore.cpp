#include "nnose/datastore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "byte_io.hpp"
#include "nnose/error.hpp"
#include "nnose/kmeans.hpp"

namespace nnose {
namespace {

constexpr std::string_view kMagic = "NDS1";
constexpr std::uint32_t kFlagWhitening = 1u << 0;
constexpr std::uint32_t kFlagCentroids = 1u << 1;

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

struct Candidate {
  double distance;
  std::size_t index;
  bool operator<(const Candidate& o) const {
    return distance < o.distance || (distance == o.distance && index < o.index);
  }
};

void keep_best(std::vector<Candidate>& cands, std::size_t k) {
  k = std::min(k, cands.size());
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k), cands.end());
  cands.resize(k);
}

std::vector<Neighbor> to_neighbors(const Datastore& store, const std::vector<Candidate>& cands) {
  std::vector<Neighbor> out;
  out.reserve(cands.size());
  for (const auto& c : cands) {
    out.push_back(Neighbor{c.index, c.distance, store.value(c.index), store.source(c.index)});
  }
  return out;
}

void check_query(const Datastore& store, std::span<const double> query, std::size_t k) {
  if (store.size() == 0) throw Error(ErrorCode::EmptyStore, "datastore has no entries");
  if (query.size() != store.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "query dim " + std::to_string(query.size()) +
                                                  " vs store dim " + std::to_string(store.dim()));
  }
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  for (double v : query) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite query entry");
  }
}

}  // namespace

Embedding Datastore::prepare_query(std::span<const double> raw) const {
  if (raw.size() != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "query dim " + std::to_string(raw.size()) +
                                                  " vs store dim " + std::to_string(dim_));
  }
  if (whitening_) return apply_whitening(*whitening_, raw);
  return Embedding(raw.begin(), raw.end());
}

std::map<std::string, std::uint64_t> Datastore::source_counts() const {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& s : sources_) counts[s] = 0;
  for (auto idx : source_index_) ++counts[sources_[idx]];
  return counts;
}

Datastore build_datastore(std::span<const DatasetSplit> splits, const DatastoreConfig& config) {
  if (config.ncentroids == 0 || config.nprobe == 0 || config.kmeans_iters == 0) {
    throw Error(ErrorCode::InvalidArgument, "ncentroids, nprobe and kmeans_iters must be positive");
  }
  std::size_t n = 0;
  std::size_t dim = 0;
  for (const auto& split : splits) {
    for (const auto& s : split.sentences) {
      for (const auto& t : s.tokens) {
        if (n == 0) dim = t.embedding.size();
        if (t.embedding.size() != dim) {
          throw Error(ErrorCode::DimensionMismatch, "embedding dim " +
                                                        std::to_string(t.embedding.size()) +
                                                        " vs " + std::to_string(dim));
        }
        ++n;
      }
    }
  }
  if (n == 0) throw Error(ErrorCode::EmptyInput, "no tokens to store");
  if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "zero-dimensional embeddings");

  Datastore store;
  store.config_ = config;
  store.config_.ncentroids =
      static_cast<std::uint32_t>(std::max<std::size_t>(1, std::min<std::size_t>(config.ncentroids, n / 4)));
  store.config_.nprobe = std::min(config.nprobe, store.config_.ncentroids);
  store.dim_ = dim;

  if (config.use_whitening) {
    std::vector<Embedding> raw;
    raw.reserve(n);
    for (const auto& split : splits) {
      for (const auto& s : split.sentences) {
        for (const auto& t : s.tokens) raw.push_back(t.embedding);
      }
    }
    WhiteningModel model = fit_whitening(raw);
    for (auto& v : model.mean) v = to_f32(v);
    for (auto& v : model.transform) v = to_f32(v);
    store.whitening_ = std::move(model);
  }

  store.keys_.reserve(n * dim);
  store.values_.reserve(n);
  store.source_index_.reserve(n);
  store.positions_.reserve(n);
  Embedding scratch(dim);
  for (const auto& split : splits) {
    auto it = std::find(store.sources_.begin(), store.sources_.end(), split.dataset_id);
    if (it == store.sources_.end()) {
      if (store.sources_.size() == std::numeric_limits<std::uint16_t>::max()) {
        throw Error(ErrorCode::InvalidArgument, "too many source datasets");
      }
      store.sources_.push_back(split.dataset_id);
      it = store.sources_.end() - 1;
    }
    const auto src = static_cast<std::uint16_t>(it - store.sources_.begin());
    for (std::size_t si = 0; si < split.sentences.size(); ++si) {
      const auto& tokens = split.sentences[si].tokens;
      for (std::size_t ti = 0; ti < tokens.size(); ++ti) {
        const auto& emb = tokens[ti].embedding;
        for (double v : emb) {
          if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite embedding entry");
        }
        if (store.whitening_) {
          apply_whitening_into(*store.whitening_, emb, scratch);
        } else {
          std::copy(emb.begin(), emb.end(), scratch.begin());
        }
        for (double v : scratch) store.keys_.push_back(static_cast<float>(v));
        store.values_.push_back(tokens[ti].gold);
        store.source_index_.push_back(src);
        store.positions_.push_back(
            TokenPosition{static_cast<std::uint32_t>(si), static_cast<std::uint32_t>(ti)});
      }
    }
  }

  if (config.build_index) {
    auto km = train_kmeans(store.keys_, dim, store.config_.ncentroids, config.kmeans_iters,
                           config.seed);
    store.ncentroids_ = km.ncentroids;
    store.centroids_ = std::move(km.centroids);
    store.lists_.assign(km.ncentroids, {});
    for (std::size_t i = 0; i < n; ++i) store.lists_[km.assignment[i]].push_back(i);
  }
  return store;
}

std::vector<Neighbor> exact_search(const Datastore& store, std::span<const double> query,
                                   std::size_t k) {
  check_query(store, query, k);
  const Embedding q = store.prepare_query(query);
  std::vector<Candidate> cands(store.size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    cands[i] = Candidate{squared_l2(store.key(i), q), i};
  }
  keep_best(cands, k);
  return to_neighbors(store, cands);
}

std::vector<Neighbor> clustered_search(const Datastore& store, std::span<const double> query,
                                       std::size_t k) {
  if (!store.has_centroids()) throw Error(ErrorCode::NoCentroids, "datastore has no index");
  check_query(store, query, k);
  const Embedding q = store.prepare_query(query);

  std::vector<Candidate> probes(store.ncentroids());
  for (std::size_t c = 0; c < store.ncentroids(); ++c) {
    probes[c] = Candidate{squared_l2(store.centroid(c), q), c};
  }
  keep_best(probes, store.config().nprobe);

  std::vector<Candidate> cands;
  for (const auto& p : probes) {
    for (auto i : store.members(p.index)) {
      cands.push_back(Candidate{squared_l2(store.key(i), q), static_cast<std::size_t>(i)});
    }
  }
  keep_best(cands, k);
  return to_neighbors(store, cands);
}

std::vector<Neighbor> search(const Datastore& store, std::span<const double> query,
                             std::size_t k, SearchMode mode) {
  return mode == SearchMode::Exact ? exact_search(store, query, k)
                                   : clustered_search(store, query, k);
}

std::map<std::string, std::uint64_t> provenance_counts(const Datastore& store,
                                                       std::span<const Embedding> queries,
                                                       std::size_t k, SearchMode mode) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& s : store.sources()) counts[s] = 0;
  for (const auto& q : queries) {
    for (const auto& nb : search(store, q, k, mode)) ++counts[nb.source];
  }
  return counts;
}

std::string encode_datastore(const Datastore& store) {
  detail::ByteWriter out;
  out.bytes(kMagic);
  out.u32(kDatastoreVersion);
  std::uint32_t flags = 0;
  if (store.whitening_) flags |= kFlagWhitening;
  if (store.ncentroids_ > 0) flags |= kFlagCentroids;
  out.u32(flags);
  out.u32(static_cast<std::uint32_t>(store.dim_));
  out.u64(store.values_.size());

  const auto& cfg = store.config_;
  out.u8(cfg.use_whitening ? 1 : 0);
  out.u32(cfg.ncentroids);
  out.u32(cfg.nprobe);
  out.u32(cfg.kmeans_iters);
  out.u64(cfg.seed);

  out.u16(static_cast<std::uint16_t>(store.sources_.size()));
  for (const auto& s : store.sources_) {
    out.u16(static_cast<std::uint16_t>(s.size()));
    out.bytes(s);
  }

  if (store.whitening_) {
    for (double v : store.whitening_->mean) out.f32(static_cast<float>(v));
    for (double v : store.whitening_->transform) out.f32(static_cast<float>(v));
  }

  for (std::size_t i = 0; i < store.values_.size(); ++i) {
    for (float v : store.key(i)) out.f32(v);
    out.u8(static_cast<std::uint8_t>(ordinal(store.values_[i])));
    out.u16(store.source_index_[i]);
    out.u32(store.positions_[i].sentence);
    out.u32(store.positions_[i].token);
  }

  if (store.ncentroids_ > 0) {
    out.u32(static_cast<std::uint32_t>(store.ncentroids_));
    for (float v : store.centroids_) out.f32(v);
    for (const auto& list : store.lists_) {
      out.u64(list.size());
      for (auto idx : list) out.u64(idx);
    }
  }
  return out.data();
}

Datastore decode_datastore(std::string_view bytes) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw Error(ErrorCode::MagicMismatch, "not an NDS1 datastore");
  }
  detail::ByteReader in(bytes.substr(kMagic.size()), ErrorCode::CorruptFile);
  if (const auto version = in.u32(); version != kDatastoreVersion) {
    throw Error(ErrorCode::VersionMismatch, "NDS1 version " + std::to_string(version));
  }
  const auto flags = in.u32();
  if (flags & ~(kFlagWhitening | kFlagCentroids)) {
    throw Error(ErrorCode::CorruptFile, "unknown flags");
  }
  Datastore store;
  store.dim_ = in.u32();
  const auto n = in.u64();
  if (store.dim_ == 0) throw Error(ErrorCode::CorruptFile, "zero dimension");

  auto& cfg = store.config_;
  cfg.use_whitening = in.u8() != 0;
  cfg.ncentroids = in.u32();
  cfg.nprobe = in.u32();
  cfg.kmeans_iters = in.u32();
  cfg.seed = in.u64();
  cfg.build_index = (flags & kFlagCentroids) != 0;
  if (cfg.use_whitening != ((flags & kFlagWhitening) != 0)) {
    throw Error(ErrorCode::CorruptFile, "whitening flag disagrees with config");
  }

  const auto n_sources = in.u16();
  for (std::uint16_t s = 0; s < n_sources; ++s) store.sources_.emplace_back(in.bytes(in.u16()));

  const std::size_t dim = store.dim_;
  if (flags & kFlagWhitening) {
    WhiteningModel model;
    model.dim = dim;
    model.mean.resize(dim);
    model.transform.resize(dim * dim);
    for (auto& v : model.mean) v = in.f32();
    for (auto& v : model.transform) v = in.f32();
    store.whitening_ = std::move(model);
  }

  const std::size_t entry_bytes = dim * 4 + 1 + 2 + 4 + 4;
  if (n > in.remaining() / entry_bytes) throw Error(ErrorCode::CorruptFile, "entry block truncated");
  store.keys_.resize(n * dim);
  store.values_.reserve(n);
  store.source_index_.reserve(n);
  store.positions_.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dim; ++j) store.keys_[i * dim + j] = in.f32();
    const auto tag = label_from_ordinal(in.u8());
    if (!tag) throw Error(ErrorCode::CorruptFile, "bad tag in entry " + std::to_string(i));
    store.values_.push_back(*tag);
    const auto src = in.u16();
    if (src >= store.sources_.size()) {
      throw Error(ErrorCode::CorruptFile, "source index out of range in entry " + std::to_string(i));
    }
    store.source_index_.push_back(src);
    TokenPosition pos;
    pos.sentence = in.u32();
    pos.token = in.u32();
    store.positions_.push_back(pos);
  }

  if (flags & kFlagCentroids) {
    store.ncentroids_ = in.u32();
    if (store.ncentroids_ == 0 || store.ncentroids_ != cfg.ncentroids) {
      throw Error(ErrorCode::CorruptFile, "centroid count disagrees with config");
    }
    if (store.ncentroids_ > in.remaining() / (dim * 4)) {
      throw Error(ErrorCode::CorruptFile, "centroid block truncated");
    }
    store.centroids_.resize(store.ncentroids_ * dim);
    for (auto& v : store.centroids_) v = in.f32();
    std::vector<bool> seen(n, false);
    store.lists_.resize(store.ncentroids_);
    for (auto& list : store.lists_) {
      const auto count = in.u64();
      if (count > in.remaining() / 8) throw Error(ErrorCode::CorruptFile, "member list truncated");
      list.reserve(count);
      for (std::uint64_t m = 0; m < count; ++m) {
        const auto idx = in.u64();
        if (idx >= n || seen[idx]) throw Error(ErrorCode::CorruptFile, "member lists are not a partition");
        seen[idx] = true;
        list.push_back(idx);
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      throw Error(ErrorCode::CorruptFile, "entry missing from member lists");
    }
  }
  if (in.remaining() != 0) throw Error(ErrorCode::CorruptFile, "trailing bytes");
  return store;
}

void save_datastore(const Datastore& store, const std::filesystem::path& path) {
  detail::write_file_atomic(path, encode_datastore(store));
}

Datastore load_datastore(const std::filesystem::path& path) {
  return decode_datastore(detail::read_file(path));
}

}  // namespace nnose
