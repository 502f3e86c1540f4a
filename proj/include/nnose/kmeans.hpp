#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nnose {

struct KMeansResult {
  std::size_t ncentroids = 0;
  std::size_t dim = 0;
  std::vector<float> centroids;            // ncentroids x dim, row-major
  std::vector<std::uint32_t> assignment;   // nearest centroid per point
};

/// Squared L2 between a float row and a double/float row, accumulated in double.
double squared_l2(std::span<const float> a, std::span<const double> b);
double squared_l2(std::span<const float> a, std::span<const float> b);

/// Index of the nearest centroid; ties go to the lowest index.
std::uint32_t nearest_centroid(std::span<const float> centroids, std::size_t dim,
                               std::span<const float> point);

/// Lloyd's algorithm with k-means++ seeding and exactly `iterations` rounds
/// (no early stop). Clusters left empty after an update are re-seeded at the
/// point farthest from its assigned centroid. The returned centroids are
/// rounded to f32 and the assignment is recomputed against those values.
KMeansResult train_kmeans(std::span<const float> points, std::size_t dim, std::size_t k,
                          std::size_t iterations, std::uint64_t seed);

}  // namespace nnose
