#include <doctest.h>

#include <cmath>
#include <functional>

#include "nnose/error.hpp"
#include "nnose/fusion.hpp"
#include "nnose/pipeline.hpp"
#include "support.hpp"

using namespace nnose;

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

Neighbor nb(LabelTag tag, double d) { return Neighbor{0, d, tag, "x"}; }

// Unshifted kNN weights in long double.
std::array<long double, 3> naive_knn(const std::vector<Neighbor>& nbs, double t) {
  std::array<long double, 3> w{};
  long double total = 0;
  for (const auto& n : nbs) {
    const long double e = std::exp(-static_cast<long double>(n.distance) / t);
    w[ordinal(n.value)] += e;
    total += e;
  }
  for (auto& v : w) v /= total;
  return w;
}

std::vector<Neighbor> random_neighbors(Rng& rng, std::size_t n, double scale) {
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(nb(static_cast<LabelTag>(rng.below(3)), rng.uniform() * scale));
  return out;
}

}  // namespace

TEST_CASE("knn distribution examples") {
  const std::vector<Neighbor> one{nb(LabelTag::B, 3.7)};
  CHECK(knn_distribution(one, 1.0) == Distribution3::one_hot(LabelTag::B));

  const std::vector<Neighbor> two{nb(LabelTag::B, 1.0), nb(LabelTag::O, 2.0)};
  const auto d = knn_distribution(two, 1.0);
  const double expected_b = std::exp(-1.0) / (std::exp(-1.0) + std::exp(-2.0));
  CHECK(d[LabelTag::B] == doctest::Approx(expected_b).epsilon(1e-14));
  CHECK(d[LabelTag::B] == doctest::Approx(0.73106).epsilon(1e-5));
  CHECK(d[LabelTag::O] == doctest::Approx(0.26894).epsilon(1e-5));
  CHECK(d[LabelTag::I] == 0.0);

  const std::vector<Neighbor> four{nb(LabelTag::B, 2.0), nb(LabelTag::B, 2.0), nb(LabelTag::I, 2.0),
                                   nb(LabelTag::O, 2.0)};
  for (double t : {0.1, 1.0, 7.0}) {
    const auto e = knn_distribution(four, t);
    CHECK(e[LabelTag::B] == 0.5);
    CHECK(e[LabelTag::I] == 0.25);
    CHECK(e[LabelTag::O] == 0.25);
  }
}

TEST_CASE("knn distribution errors and extreme distances") {
  CHECK(code_of([] { knn_distribution(std::vector<Neighbor>{}, 1.0); }) == ErrorCode::EmptyNeighborList);
  CHECK(code_of([] { knn_distribution(std::vector<Neighbor>{nb(LabelTag::O, 1.0)}, 0.0); }) ==
        ErrorCode::InvalidArgument);
  // exp(-5000) underflows without the shift.
  const std::vector<Neighbor> far{nb(LabelTag::I, 5000.0), nb(LabelTag::O, 5001.0)};
  const auto d = knn_distribution(far, 1.0);
  CHECK(d[LabelTag::I] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("knn distribution agrees with the naive formula and is shift invariant") {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto nbs = random_neighbors(rng, 1 + rng.below(32), 10.0);
    const double t = 0.1 + rng.uniform() * 9.9;
    const auto d = knn_distribution(nbs, t);
    const auto ref = naive_knn(nbs, t);
    for (auto tag : kAllLabels) {
      CHECK(d[tag] == doctest::Approx(static_cast<double>(ref[ordinal(tag)])).epsilon(1e-9));
    }
    CHECK(std::abs(d.sum() - 1.0) <= 1e-12);

    auto shifted = nbs;
    const double c = rng.uniform() * 100.0;
    for (auto& n : shifted) n.distance += c;
    const auto s = knn_distribution(shifted, t);
    for (auto tag : kAllLabels) CHECK(std::abs(s[tag] - d[tag]) <= 1e-9);

    // Zero-mass rule, bitwise.
    for (auto tag : kAllLabels) {
      bool present = false;
      for (const auto& n : nbs) present = present || n.value == tag;
      if (!present) CHECK(d[tag] == 0.0);
    }
  }
}

TEST_CASE("homogeneous neighbors give one-hot output at any temperature") {
  Rng rng(22);
  for (auto tag : kAllLabels) {
    std::vector<Neighbor> nbs;
    for (int i = 0; i < 9; ++i) nbs.push_back(nb(tag, rng.uniform() * 50.0));
    for (double t : {0.01, 0.5, 1.0, 3.0, 100.0}) CHECK(knn_distribution(nbs, t) == Distribution3::one_hot(tag));
  }
}

TEST_CASE("interpolation") {
  Distribution3 pk;
  pk[LabelTag::B] = 1.0;
  Distribution3 pb;
  pb[LabelTag::B] = 0.2;
  pb[LabelTag::I] = 0.3;
  pb[LabelTag::O] = 0.5;
  const auto p = interpolate(pk, pb, 0.25);
  CHECK(p[LabelTag::B] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(p[LabelTag::I] == doctest::Approx(0.225).epsilon(1e-15));
  CHECK(p[LabelTag::O] == doctest::Approx(0.375).epsilon(1e-15));

  CHECK(interpolate(pk, pb, 0.0) == pb);
  CHECK(interpolate(pk, pb, 1.0) == pk);
  CHECK(code_of([&] { interpolate(pk, pb, -0.01); }) == ErrorCode::LambdaOutOfRange);
  CHECK(code_of([&] { interpolate(pk, pb, 1.5); }) == ErrorCode::LambdaOutOfRange);
  CHECK(code_of([] { FusionParams{8, 2.0, 1.0}.validate(); }) == ErrorCode::LambdaOutOfRange);
  CHECK(code_of([] { FusionParams{0, 0.5, 1.0}.validate(); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { FusionParams{4, 0.5, -1.0}.validate(); }) == ErrorCode::InvalidArgument);

  Rng rng(23);
  for (int i = 0; i < 500; ++i) {
    const auto a = nnose::testing::random_dyadic_distribution(rng);
    const auto b = nnose::testing::random_dyadic_distribution(rng);
    CHECK(std::abs(interpolate(a, b, rng.uniform()).sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("argmax ties go to the lowest ordinal") {
  Distribution3 d;
  d[LabelTag::B] = 0.5;
  d[LabelTag::I] = 0.5;
  CHECK(d.argmax() == LabelTag::B);
  d[LabelTag::O] = 0.5;
  CHECK(d.argmax() == LabelTag::O);
  Distribution3 third;
  third.p = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(third.argmax() == LabelTag::O);
}

TEST_CASE("repair") {
  using enum LabelTag;
  CHECK(repair_bio(std::vector<LabelTag>{O, I, I, O}) == std::vector<LabelTag>{O, B, I, O});
  CHECK(repair_bio(std::vector<LabelTag>{B, I, O}) == std::vector<LabelTag>{B, I, O});
  CHECK(repair_bio(std::vector<LabelTag>{I}) == std::vector<LabelTag>{B});
  CHECK(repair_bio(std::vector<LabelTag>{}).empty());

  Rng rng(24);
  for (int i = 0; i < 500; ++i) {
    std::vector<LabelTag> tags;
    const std::size_t n = rng.below(20);
    for (std::size_t j = 0; j < n; ++j) tags.push_back(static_cast<LabelTag>(rng.below(3)));
    const auto once = repair_bio(tags);
    CHECK(repair_bio(once) == once);
    for (std::size_t j = 0; j < n; ++j) {
      if (once[j] == I) CHECK((j > 0 && once[j - 1] != O));
      if (tags[j] != I) CHECK(once[j] == tags[j]);
    }
  }
}

TEST_CASE("inference endpoints") {
  Rng rng(25);
  auto sentences = nnose::testing::random_sentences(rng, 30, 4, "ds", 8);
  for (auto& s : sentences) {
    for (auto& t : s.tokens) t.gold = static_cast<LabelTag>(rng.below(3));
  }
  DatastoreConfig cfg;
  cfg.use_whitening = false;
  cfg.ncentroids = 8;
  cfg.nprobe = 8;
  const std::vector<DatasetSplit> splits{{"ds", sentences}};
  const auto store = build_datastore(splits, cfg);
  const auto queries = nnose::testing::random_sentences(rng, 20, 4, "q", 8);

  for (auto mode : {SearchMode::Exact, SearchMode::Clustered}) {
    for (const auto& s : queries) {
      const auto base = infer_sentence(store, s, FusionParams{5, 0.0, 1.0}, mode);
      REQUIRE(base.size() == s.tokens.size());
      for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(base[i].distribution == s.tokens[i].base);
        CHECK(base[i].tag == s.tokens[i].base.argmax());
      }
      const auto knn_only = infer_sentence(store, s, FusionParams{5, 1.0, 2.0}, mode);
      for (std::size_t i = 0; i < knn_only.size(); ++i) {
        const auto nbs = search(store, s.tokens[i].embedding, 5, mode);
        CHECK(knn_only[i].distribution == knn_distribution(nbs, 2.0));
      }
      const auto mixed = infer_sentence(store, s, FusionParams{7, 0.4, 0.5}, mode);
      for (const auto& p : mixed) CHECK(std::abs(p.distribution.sum() - 1.0) <= 1e-9);
    }
  }
}

TEST_CASE("a store holding only B entries predicts B everywhere at lambda 1") {
  Rng rng(26);
  auto sentences = nnose::testing::random_sentences(rng, 10, 3, "ds");
  for (auto& s : sentences) {
    for (auto& t : s.tokens) t.gold = LabelTag::B;
  }
  DatastoreConfig cfg;
  cfg.use_whitening = false;
  const std::vector<DatasetSplit> splits{{"ds", sentences}};
  const auto store = build_datastore(splits, cfg);
  for (const auto& s : nnose::testing::random_sentences(rng, 10, 3, "q")) {
    for (const auto& p : infer_sentence(store, s, FusionParams{3, 1.0, 1.0}, SearchMode::Clustered)) {
      CHECK(p.tag == LabelTag::B);
      CHECK(p.distribution[LabelTag::O] == 0.0);
      CHECK(p.distribution[LabelTag::I] == 0.0);
    }
  }
}

TEST_CASE("dimension mismatch propagates from search") {
  Rng rng(27);
  const auto sentences = nnose::testing::random_sentences(rng, 5, 3, "ds");
  DatastoreConfig cfg;
  cfg.use_whitening = false;
  const std::vector<DatasetSplit> splits{{"ds", sentences}};
  const auto store = build_datastore(splits, cfg);
  const auto wrong = nnose::testing::random_sentences(rng, 1, 4, "q");
  CHECK(code_of([&] { infer_sentence(store, wrong[0], FusionParams{}, SearchMode::Exact); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("corpus inference is independent of thread count") {
  Rng rng(28);
  const auto sentences = nnose::testing::random_sentences(rng, 40, 5, "ds", 8);
  DatastoreConfig cfg;
  cfg.ncentroids = 8;
  const std::vector<DatasetSplit> splits{{"ds", sentences}};
  const auto store = build_datastore(splits, cfg);
  const auto queries = nnose::testing::random_sentences(rng, 50, 5, "q", 8);
  const auto all = infer_corpus(store, queries, FusionParams{6, 0.3, 1.5}, SearchMode::Clustered);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    CHECK(all[i] == infer_sentence(store, queries[i], FusionParams{6, 0.3, 1.5}, SearchMode::Clustered));
  }
}
