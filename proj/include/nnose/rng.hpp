#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace nnose {

/// std::mt19937_64 with hand-written value mappings: the engine's output is
/// fixed by the standard, the <random> distributions are not, and builds
/// must be byte-reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  double uniform();                        // [0, 1)
  std::size_t below(std::size_t bound);    // [0, bound)
  double normal();                         // standard normal (Box-Muller)

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nnose
