#include "support.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "nnose/datastore.hpp"
#include "nnose/token_stream.hpp"

namespace nnose::testing {

TempDir::TempDir(const std::string& tag) {
  Rng rng(std::hash<std::string>{}(tag) ^ static_cast<std::uint64_t>(
                                              std::chrono::steady_clock::now().time_since_epoch().count()));
  path_ = std::filesystem::temp_directory_path() / ("nnose-" + tag + "-" + std::to_string(rng.next_u64() % 1000000007));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Embedding random_embedding(Rng& rng, std::size_t dim, double scale) {
  Embedding v(dim);
  for (auto& x : v) x = static_cast<float>(scale * rng.normal());
  return v;
}

Distribution3 random_dyadic_distribution(Rng& rng) {
  constexpr std::uint64_t kDen = 1u << 16;
  const auto a = rng.below(kDen + 1);
  const auto b = rng.below(kDen - a + 1);
  Distribution3 d;
  d.p[0] = static_cast<double>(a) / kDen;
  d.p[1] = static_cast<double>(b) / kDen;
  d.p[2] = static_cast<double>(kDen - a - b) / kDen;
  return d;
}

std::vector<Sentence> random_sentences(Rng& rng, std::size_t count, std::size_t dim,
                                       const std::string& dataset_id, std::size_t max_tokens) {
  std::vector<Sentence> out(count);
  for (auto& s : out) {
    s.dataset_id = dataset_id;
    const std::size_t n = 1 + rng.below(max_tokens);
    for (std::size_t t = 0; t < n; ++t) {
      TokenRecord tok;
      tok.text = "tok" + std::to_string(rng.below(50));
      tok.gold = static_cast<LabelTag>(rng.below(3));
      tok.embedding = random_embedding(rng, dim);
      tok.base = random_dyadic_distribution(rng);
      s.tokens.push_back(std::move(tok));
    }
  }
  return out;
}

std::vector<Embedding> random_points(Rng& rng, std::size_t n, std::size_t dim, double scale) {
  std::vector<Embedding> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_embedding(rng, dim, scale));
  return out;
}

void write_cross_layout(const std::filesystem::path& dir, const CrossLayoutConfig& config) {
  std::vector<SynthWorld> worlds;
  std::vector<DatasetSplit> train;
  for (std::size_t i = 0; i < config.datasets.size(); ++i) {
    SynthConfig sc;
    sc.dataset_id = config.datasets[i];
    sc.seed = config.seed * 1000 + i;
    sc.n_train_sentences = config.n_train_sentences;
    sc.n_test_sentences = config.n_test_sentences;
    worlds.push_back(make_world(sc));
    train.push_back({sc.dataset_id, sample_sentences(worlds.back(), sc.n_train_sentences,
                                                     split_seed(sc.seed, 0, false), config.in_domain_noise,
                                                     split_seed(sc.seed, 0, true))});
  }
  DatastoreConfig dc;
  dc.ncentroids = config.ncentroids;
  dc.seed = config.seed;
  const Datastore store = build_datastore(train, dc);
  for (std::size_t a = 0; a < config.datasets.size(); ++a) {
    const auto model_dir = dir / config.datasets[a];
    std::filesystem::create_directories(model_dir);
    save_datastore(store, model_dir / "store.nds");
    for (std::size_t b = 0; b < config.datasets.size(); ++b) {
      const auto& w = worlds[b];
      const double noise = a == b ? config.in_domain_noise : config.shift_noise;
      const auto test = sample_sentences(w, w.config.n_test_sentences, split_seed(w.config.seed, 2, false),
                                         noise, split_seed(w.config.seed, 2, true) + a);
      write_token_stream(test, model_dir / (config.datasets[b] + ".ets"));
    }
  }
}

}  // namespace nnose::testing
