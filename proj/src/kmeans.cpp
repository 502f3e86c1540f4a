#include "nnose/kmeans.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "nnose/error.hpp"
#include "nnose/parallel.hpp"
#include "nnose/rng.hpp"

namespace nnose {

double squared_l2(std::span<const float> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return acc;
}

double squared_l2(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

std::uint32_t nearest_centroid(std::span<const float> centroids, std::size_t dim,
                               std::span<const float> point) {
  const std::size_t k = centroids.size() / dim;
  std::uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < k; ++c) {
    const float* row = centroids.data() + c * dim;
    // Partial sums only grow, so a row can be abandoned once it passes the
    // current best; the winner is the same as with full sums.
    double acc = 0.0;
    std::size_t j = 0;
    while (j < dim && acc < best_d) {
      const std::size_t stop = std::min(dim, j + 8);
      for (; j < stop; ++j) {
        const double diff = static_cast<double>(point[j]) - static_cast<double>(row[j]);
        acc += diff * diff;
      }
    }
    if (j == dim && acc < best_d) {
      best_d = acc;
      best = static_cast<std::uint32_t>(c);
    }
  }
  return best;
}

namespace {

std::span<const float> row(std::span<const float> points, std::size_t dim, std::size_t i) {
  return points.subspan(i * dim, dim);
}

std::vector<std::size_t> kmeans_plus_plus(std::span<const float> points, std::size_t n,
                                          std::size_t dim, std::size_t k, Rng& rng) {
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  chosen.push_back(rng.below(n));
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  while (chosen.size() < k) {
    const auto last = row(points, dim, chosen.back());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_d[i] = std::min(min_d[i], squared_l2(row(points, dim, i), last));
      total += min_d[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += min_d[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    chosen.push_back(pick);
  }
  return chosen;
}

// Nearest centroid for every point via ||c||^2 - 2 x.c on blocks of points
// (one GEMM per block). Ties go to the lowest centroid index.
void assign_all(std::span<const float> points, std::size_t n, std::size_t dim,
                std::span<const float> centroids, std::vector<std::uint32_t>& assignment) {
  using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto k = static_cast<Eigen::Index>(centroids.size() / dim);
  const auto d = static_cast<Eigen::Index>(dim);
  const Eigen::Map<const RowMatrix> cmat(centroids.data(), k, d);
  const Eigen::VectorXf cnorm = cmat.rowwise().squaredNorm();

  constexpr std::size_t kBlock = 256;
  const std::size_t blocks = (n + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t begin = b * kBlock;
    const std::size_t rows = std::min(n, begin + kBlock) - begin;
    const Eigen::Map<const RowMatrix> pmat(points.data() + begin * dim,
                                           static_cast<Eigen::Index>(rows), d);
    RowMatrix scores = pmat * cmat.transpose();
    for (std::size_t r = 0; r < rows; ++r) {
      std::uint32_t best = 0;
      float best_score = std::numeric_limits<float>::infinity();
      for (Eigen::Index c = 0; c < k; ++c) {
        const float score = cnorm[c] - 2.0f * scores(static_cast<Eigen::Index>(r), c);
        if (score < best_score) {
          best_score = score;
          best = static_cast<std::uint32_t>(c);
        }
      }
      assignment[begin + r] = best;
    }
  });
}

}  // namespace

KMeansResult train_kmeans(std::span<const float> points, std::size_t dim, std::size_t k,
                          std::size_t iterations, std::uint64_t seed) {
  if (dim == 0 || points.size() % dim != 0) {
    throw Error(ErrorCode::DimensionMismatch, "point buffer is not a multiple of dim");
  }
  const std::size_t n = points.size() / dim;
  if (n == 0) throw Error(ErrorCode::EmptyInput, "k-means on zero points");
  if (k == 0 || k > n) {
    throw Error(ErrorCode::InvalidArgument,
                "k-means with k=" + std::to_string(k) + " on " + std::to_string(n) + " points");
  }

  Rng rng(seed);
  std::vector<float> centroids(k * dim);
  {
    const auto seeds = kmeans_plus_plus(points, n, dim, k, rng);
    for (std::size_t c = 0; c < k; ++c) {
      std::copy_n(points.begin() + static_cast<std::ptrdiff_t>(seeds[c] * dim), dim,
                  centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
    }
  }

  std::vector<std::uint32_t> assignment(n, 0);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  for (std::size_t iter = 0; iter < iterations; ++iter) {
    assign_all(points, n, dim, centroids, assignment);

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = assignment[i];
      ++counts[c];
      for (std::size_t j = 0; j < dim; ++j) sums[c * dim + j] += points[i * dim + j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) {
        centroids[c * dim + j] = static_cast<float>(sums[c * dim + j] / static_cast<double>(counts[c]));
      }
    }

    // Empty-cluster repair: move each empty centroid onto the point that is
    // farthest from its own centroid, taken from a cluster with >1 member.
    // Moving a point never changes any other point's distance, so one
    // descending pass over precomputed distances gives the same picks as
    // rescanning after every repair.
    if (std::find(counts.begin(), counts.end(), 0) != counts.end()) {
      std::vector<std::pair<double, std::size_t>> far(n);
      for (std::size_t i = 0; i < n; ++i) {
        far[i] = {squared_l2(row(points, dim, i),
                             std::span<const float>(centroids).subspan(assignment[i] * dim, dim)),
                  i};
      }
      // Farthest first; equal distances keep the lower index first.
      std::sort(far.begin(), far.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
      });
      std::size_t cursor = 0;
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] != 0) continue;
        while (cursor < n && counts[assignment[far[cursor].second]] <= 1) ++cursor;
        if (cursor == n) break;
        const std::size_t p = far[cursor++].second;
        --counts[assignment[p]];
        assignment[p] = static_cast<std::uint32_t>(c);
        counts[c] = 1;
        std::copy_n(points.begin() + static_cast<std::ptrdiff_t>(p * dim), dim,
                    centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
      }
    }
  }

  KMeansResult result;
  result.ncentroids = k;
  result.dim = dim;
  result.centroids = std::move(centroids);
  result.assignment.assign(n, 0);
  assign_all(points, n, dim, result.centroids, result.assignment);
  return result;
}

}  // namespace nnose
