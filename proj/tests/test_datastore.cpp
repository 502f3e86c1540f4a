#include <functional>
#include <limits>
#include <doctest.h>

#include <chrono>
#include <fstream>
#include <set>
#include <thread>

#include "nnose/datastore.hpp"
#include "nnose/error.hpp"
#include "nnose/token_stream.hpp"
#include "support.hpp"

using namespace nnose;
using nnose::testing::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an nnose::Error");
  return ErrorCode::InvalidArgument;
}

Sentence sentence_of(const std::vector<Embedding>& keys, const std::vector<LabelTag>& tags,
                     const std::string& id) {
  Sentence s;
  s.dataset_id = id;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    s.tokens.push_back(TokenRecord{"t" + std::to_string(i), tags[i], keys[i], Distribution3::one_hot(tags[i])});
  }
  return s;
}

DatasetSplit split_of(Rng& rng, const std::string& id, std::size_t n, std::size_t dim,
                      double scale = 1.0, double offset = 0.0) {
  std::vector<Embedding> keys;
  std::vector<LabelTag> tags;
  for (std::size_t i = 0; i < n; ++i) {
    auto k = nnose::testing::random_embedding(rng, dim, scale);
    for (auto& v : k) v += offset;
    keys.push_back(k);
    tags.push_back(static_cast<LabelTag>(rng.below(3)));
  }
  return {id, {sentence_of(keys, tags, id)}};
}

DatastoreConfig raw_config(std::uint32_t ncentroids = 4) {
  DatastoreConfig c;
  c.use_whitening = false;
  c.ncentroids = ncentroids;
  c.nprobe = ncentroids;
  return c;
}

// Brute-force nearest neighbors by squared L2 over the stored keys.
std::vector<std::size_t> brute_force(const Datastore& store, const Embedding& raw, std::size_t k) {
  const auto q = store.prepare_query(raw);
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < store.size(); ++i) {
    double d = 0.0;
    const auto key = store.key(i);
    for (std::size_t j = 0; j < q.size(); ++j) d += (key[j] - q[j]) * (key[j] - q[j]);
    all.emplace_back(d, i);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

std::vector<std::size_t> indices(const std::vector<Neighbor>& nbs) {
  std::vector<std::size_t> out;
  for (const auto& n : nbs) out.push_back(n.entry_index);
  return out;
}

}  // namespace

TEST_CASE("two datasets of ten tokens each") {
  Rng rng(1);
  const std::vector<DatasetSplit> splits{split_of(rng, "ds1", 10, 3), split_of(rng, "ds2", 10, 3)};
  const auto store = build_datastore(splits, raw_config());
  CHECK(store.size() == 20);
  CHECK(store.source_counts() == std::map<std::string, std::uint64_t>{{"ds1", 10}, {"ds2", 10}});
  CHECK(store.source(0) == "ds1");
  CHECK(store.source(19) == "ds2");
  CHECK(store.position(12) == TokenPosition{0, 2});
}

TEST_CASE("without whitening stored keys equal the raw embeddings bit for bit") {
  Rng rng(2);
  const std::vector<DatasetSplit> splits{split_of(rng, "ds", 40, 5)};
  const auto store = build_datastore(splits, raw_config());
  CHECK_FALSE(store.whitening().has_value());
  const auto& tokens = splits[0].sentences[0].tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (std::size_t j = 0; j < 5; ++j) CHECK(static_cast<double>(store.key(i)[j]) == tokens[i].embedding[j]);
  }
}

TEST_CASE("O tags are stored alongside B and I") {
  Rng rng(3);
  const std::vector<DatasetSplit> splits{split_of(rng, "ds", 60, 2)};
  const auto store = build_datastore(splits, raw_config());
  std::set<LabelTag> seen;
  for (std::size_t i = 0; i < store.size(); ++i) seen.insert(store.value(i));
  CHECK(seen.size() == 3);
}

TEST_CASE("hand-built two-entry store") {
  const std::vector<DatasetSplit> splits{
      {"d", {sentence_of({{0.0, 0.0}, {10.0, 10.0}}, {LabelTag::O, LabelTag::B}, "d")}}};
  auto cfg = raw_config(1);
  cfg.build_index = false;
  const auto store = build_datastore(splits, cfg);

  const auto nb = exact_search(store, Embedding{1.0, 1.0}, 1);
  REQUIRE(nb.size() == 1);
  CHECK(nb[0].entry_index == 0);
  CHECK(nb[0].distance == 2.0);
  CHECK(nb[0].value == LabelTag::O);

  CHECK(exact_search(store, Embedding{1.0, 1.0}, 5).size() == 2);
  const auto hit = exact_search(store, Embedding{10.0, 10.0}, 2);
  CHECK(hit[0].entry_index == 1);
  CHECK(hit[0].distance == 0.0);

  CHECK(code_of([&] { clustered_search(store, Embedding{1.0, 1.0}, 1); }) == ErrorCode::NoCentroids);
}

TEST_CASE("a raw query equal to a stored key comes back first at distance zero (whitened store)") {
  Rng rng(4);
  const std::vector<DatasetSplit> splits{split_of(rng, "ds", 300, 6)};
  DatastoreConfig cfg;
  cfg.ncentroids = 16;
  cfg.nprobe = 4;
  const auto store = build_datastore(splits, cfg);
  REQUIRE(store.whitening().has_value());
  for (std::size_t i = 0; i < 300; i += 37) {
    const auto& raw = splits[0].sentences[0].tokens[i].embedding;
    const auto nb = exact_search(store, raw, 3);
    CHECK(nb[0].entry_index == i);
    CHECK(nb[0].distance == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("ties are broken by the lower entry index") {
  const std::vector<DatasetSplit> splits{{"d", {sentence_of({{1.0}, {-1.0}, {1.0}, {3.0}},
                                                            {LabelTag::B, LabelTag::I, LabelTag::O, LabelTag::O},
                                                            "d")}}};
  auto cfg = raw_config(1);
  const auto store = build_datastore(splits, cfg);
  CHECK(indices(exact_search(store, Embedding{0.0}, 3)) == std::vector<std::size_t>{0, 1, 2});
  CHECK(indices(clustered_search(store, Embedding{0.0}, 3)) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("exact search matches a brute-force scan; clustered with full probing matches exact") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t dim = 2 + rng.below(10);
    const std::size_t n = 20 + rng.below(400);
    const std::vector<DatasetSplit> splits{split_of(rng, "a", n / 2, dim), split_of(rng, "b", n - n / 2, dim, 2.0)};
    DatastoreConfig cfg;
    cfg.use_whitening = trial % 2 == 0;
    cfg.ncentroids = static_cast<std::uint32_t>(1 + rng.below(20));
    cfg.nprobe = cfg.ncentroids;
    cfg.seed = trial;
    const auto store = build_datastore(splits, cfg);
    for (int q = 0; q < 10; ++q) {
      const auto query = nnose::testing::random_embedding(rng, dim, 1.5);
      const std::size_t k = 1 + rng.below(12);
      const auto exact = exact_search(store, query, k);
      CHECK(indices(exact) == brute_force(store, query, k));
      CHECK(clustered_search(store, query, k) == exact);
      for (std::size_t i = 1; i < exact.size(); ++i) CHECK(exact[i - 1].distance <= exact[i].distance);
    }
  }
}

TEST_CASE("config clamping and index invariants") {
  Rng rng(6);
  const std::vector<DatasetSplit> splits{split_of(rng, "ds", 100, 3)};
  DatastoreConfig cfg;
  cfg.use_whitening = false;
  const auto store = build_datastore(splits, cfg);  // defaults 4096 / 32
  CHECK(store.config().ncentroids == 25);
  CHECK(store.config().nprobe == 25);
  CHECK(store.ncentroids() == 25);
  std::vector<int> seen(store.size(), 0);
  for (std::size_t c = 0; c < store.ncentroids(); ++c) {
    for (auto i : store.members(c)) ++seen[i];
  }
  for (int s : seen) CHECK(s == 1);

  const std::vector<DatasetSplit> tiny{split_of(rng, "ds", 3, 2)};
  CHECK(build_datastore(tiny, cfg).config().ncentroids == 1);
}

TEST_CASE("store of one entry") {
  const std::vector<DatasetSplit> splits{{"d", {sentence_of({{2.0, -1.0}}, {LabelTag::I}, "d")}}};
  const auto store = build_datastore(splits, raw_config());
  const auto nb = clustered_search(store, Embedding{100.0, 5.0}, 4);
  REQUIRE(nb.size() == 1);
  CHECK(nb[0].entry_index == 0);
  CHECK(nb[0].value == LabelTag::I);
}

TEST_CASE("clustered recall grows with nprobe and reaches 1 at full probing") {
  Rng rng(7);
  const std::vector<DatasetSplit> splits{split_of(rng, "ds", 5000, 16)};
  const auto queries = nnose::testing::random_points(rng, 200, 16);
  std::vector<std::vector<std::size_t>> truth;
  DatastoreConfig cfg;
  cfg.use_whitening = false;
  cfg.ncentroids = 32;
  const auto exact_store = build_datastore(splits, cfg);
  for (const auto& q : queries) truth.push_back(indices(exact_search(exact_store, q, 8)));
  double previous = 0.0;
  for (std::uint32_t nprobe : {1u, 2u, 4u, 8u, 16u, 32u}) {
    cfg.nprobe = nprobe;
    const auto store = build_datastore(splits, cfg);
    double recall = 0.0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const auto approx = indices(clustered_search(store, queries[q], 8));
      std::set<std::size_t> unique(approx.begin(), approx.end());
      CHECK(unique.size() == approx.size());
      int hit = 0;
      for (auto i : truth[q]) hit += unique.count(i) ? 1 : 0;
      recall += hit / 8.0;
    }
    recall /= queries.size();
    CHECK(recall >= previous);
    previous = recall;
  }
  CHECK(previous == 1.0);
}

TEST_CASE("build errors") {
  CHECK(code_of([] { build_datastore(std::vector<DatasetSplit>{}, DatastoreConfig{}); }) == ErrorCode::EmptyInput);
  CHECK(code_of([] { build_datastore(std::vector<DatasetSplit>{{"d", {}}}, DatastoreConfig{}); }) ==
        ErrorCode::EmptyInput);
  Rng rng(8);
  const std::vector<DatasetSplit> mixed{split_of(rng, "a", 5, 3), split_of(rng, "b", 5, 4)};
  CHECK(code_of([&] { build_datastore(mixed, raw_config()); }) == ErrorCode::DimensionMismatch);
  // Whitening needs a full-rank covariance.
  const std::vector<DatasetSplit> flat{{"d", {sentence_of({{1, 1}, {2, 2}, {3, 3}, {4, 4}},
                                                          {LabelTag::O, LabelTag::O, LabelTag::O, LabelTag::O}, "d")}}};
  CHECK(code_of([&] { build_datastore(flat, DatastoreConfig{}); }) == ErrorCode::RankDeficient);

  const std::vector<DatasetSplit> ok{split_of(rng, "a", 10, 3)};
  const auto store = build_datastore(ok, raw_config());
  CHECK(code_of([&] { exact_search(store, Embedding{1.0}, 1); }) == ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { clustered_search(store, Embedding{1.0, 2.0}, 1); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("save/load round trip") {
  TempDir dir("nds");
  Rng rng(9);
  SUBCASE("hand-built two-entry store answers identically") {
    const std::vector<DatasetSplit> splits{
        {"d", {sentence_of({{0.0, 0.0}, {10.0, 10.0}}, {LabelTag::O, LabelTag::B}, "d")}}};
    const auto store = build_datastore(splits, raw_config());
    save_datastore(store, dir / "two.nds");
    const auto back = load_datastore(dir / "two.nds");
    CHECK(back == store);
    for (int q = 0; q < 100; ++q) {
      const auto query = nnose::testing::random_embedding(rng, 2, 8.0);
      CHECK(exact_search(back, query, 2) == exact_search(store, query, 2));
      CHECK(clustered_search(back, query, 1) == clustered_search(store, query, 1));
    }
  }
  SUBCASE("whitened, indexed store") {
    const std::vector<DatasetSplit> splits{split_of(rng, "x", 200, 6), split_of(rng, "y", 100, 6, 3.0)};
    DatastoreConfig cfg;
    cfg.ncentroids = 10;
    cfg.nprobe = 3;
    cfg.seed = 99;
    const auto store = build_datastore(splits, cfg);
    save_datastore(store, dir / "w.nds");
    const auto back = load_datastore(dir / "w.nds");
    CHECK(back == store);
    for (int q = 0; q < 100; ++q) {
      const auto query = nnose::testing::random_embedding(rng, 6, 2.0);
      CHECK(clustered_search(back, query, 5) == clustered_search(store, query, 5));
    }
  }
}

TEST_CASE("load errors") {
  TempDir dir("nds-err");
  Rng rng(10);
  const std::vector<DatasetSplit> splits{split_of(rng, "x", 50, 4)};
  DatastoreConfig cfg;
  cfg.ncentroids = 5;
  const auto bytes = encode_datastore(build_datastore(splits, cfg));

  for (std::size_t cut : {std::size_t{5}, std::size_t{30}, bytes.size() / 2, bytes.size() - 1}) {
    CHECK(code_of([&] { decode_datastore(std::string_view(bytes).substr(0, cut)); }) == ErrorCode::CorruptFile);
  }
  auto bad_version = bytes;
  bad_version[4] = 9;
  CHECK(code_of([&] { decode_datastore(bad_version); }) == ErrorCode::VersionMismatch);

  write_token_stream(nnose::testing::random_sentences(rng, 2, 4, "x"), dir / "a.ets");
  CHECK(code_of([&] { load_datastore(dir / "a.ets"); }) == ErrorCode::MagicMismatch);

  {
    std::ofstream(dir / "trunc.nds", std::ios::binary) << bytes.substr(0, bytes.size() - 3);
    CHECK(code_of([&] { load_datastore(dir / "trunc.nds"); }) == ErrorCode::CorruptFile);
  }
}

TEST_CASE("identical inputs and seed produce identical bytes") {
  Rng rng(11);
  const std::vector<DatasetSplit> splits{split_of(rng, "x", 400, 8), split_of(rng, "y", 400, 8, 2.0)};
  DatastoreConfig cfg;
  cfg.ncentroids = 20;
  cfg.seed = 5;
  CHECK(encode_datastore(build_datastore(splits, cfg)) == encode_datastore(build_datastore(splits, cfg)));
  auto other = cfg;
  other.seed = 6;
  CHECK(encode_datastore(build_datastore(splits, cfg)) != encode_datastore(build_datastore(splits, other)));
}

TEST_CASE("provenance counts") {
  Rng rng(12);
  SUBCASE("single dataset") {
    const std::vector<DatasetSplit> splits{split_of(rng, "only", 80, 3)};
    const auto store = build_datastore(splits, raw_config());
    const auto queries = nnose::testing::random_points(rng, 10, 3);
    CHECK(provenance_counts(store, queries, 4) == std::map<std::string, std::uint64_t>{{"only", 40}});
    CHECK(provenance_counts(store, {}, 4) == std::map<std::string, std::uint64_t>{{"only", 0}});
  }
  SUBCASE("well separated datasets") {
    // Each dataset has two tight clusters; dataset 1 sits far from dataset 2.
    std::vector<DatasetSplit> splits;
    std::vector<Embedding> centers{{0, 0, 0, 0}, {6, 0, 0, 0}, {40, 40, 0, 0}, {46, 40, 0, 0}};
    for (int ds = 0; ds < 2; ++ds) {
      std::vector<Embedding> keys;
      std::vector<LabelTag> tags;
      for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < 150; ++i) {
          auto k = nnose::testing::random_embedding(rng, 4, 0.5);
          for (std::size_t j = 0; j < 4; ++j) k[j] += centers[ds * 2 + c][j];
          keys.push_back(k);
          tags.push_back(LabelTag::O);
        }
      }
      const std::string id = "ds" + std::to_string(ds + 1);
      splits.push_back({id, {sentence_of(keys, tags, id)}});
    }
    DatastoreConfig cfg;
    cfg.ncentroids = 8;
    cfg.nprobe = 2;
    const auto store = build_datastore(splits, cfg);
    const std::vector<Embedding> queries{centers[0], centers[1]};
    const auto counts = provenance_counts(store, queries, 16);
    CHECK(counts.at("ds1") + counts.at("ds2") == 32);
    CHECK(counts.at("ds1") >= 0.9 * 32);
    const auto k_clamped = provenance_counts(store, queries, 10000, SearchMode::Exact);
    CHECK(k_clamped.at("ds1") + k_clamped.at("ds2") == 2 * store.size());
  }
}

TEST_CASE("concurrent queries agree with sequential ones") {
  Rng rng(13);
  const std::vector<DatasetSplit> splits{split_of(rng, "x", 2000, 8)};
  DatastoreConfig cfg;
  cfg.ncentroids = 32;
  cfg.nprobe = 4;
  const auto store = build_datastore(splits, cfg);
  const auto queries = nnose::testing::random_points(rng, 64, 8);
  std::vector<std::vector<Neighbor>> sequential;
  for (const auto& q : queries) sequential.push_back(clustered_search(store, q, 6));

  std::vector<std::vector<Neighbor>> parallel(queries.size());
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < queries.size(); i += 4) parallel[i] = clustered_search(store, queries[i], 6);
    });
  }
  for (auto& th : pool) th.join();
  CHECK(parallel == sequential);
}

TEST_CASE("10K tokens with 64 centroids builds within 10 s") {
  Rng rng(14);
  SynthConfig sc;
  sc.n_train_sentences = 834;  // ~10K tokens at 12 per sentence
  sc.n_test_sentences = 1;
  sc.n_dev_sentences = 0;
  const auto corpus = generate(sc);
  REQUIRE(token_count(corpus.train) >= 10000);
  const std::vector<DatasetSplit> splits{{"synth", corpus.train}};
  DatastoreConfig cfg;
  cfg.ncentroids = 64;
  const auto start = std::chrono::steady_clock::now();
  const auto store = build_datastore(splits, cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(store.ncentroids() == 64);
  CHECK(seconds < 10.0);
}
