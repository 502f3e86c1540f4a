#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nnose/types.hpp"

namespace nnose {

/// Affine map x -> (x - mean) * W that sends the fitting set to zero mean
/// and identity covariance. W is dim x dim, stored row-major.
struct WhiteningModel {
  std::size_t dim = 0;
  Embedding mean;
  std::vector<double> transform;

  double w(std::size_t row, std::size_t col) const { return transform[row * dim + col]; }

  static WhiteningModel identity(std::size_t dim);

  bool operator==(const WhiteningModel&) const = default;
};

struct WhiteningOptions {
  /// Eigenvalues below this fraction of the largest one count as zero.
  double rank_tolerance = 1e-10;
};

/// Mean, population covariance (divide by N), symmetric SVD of the
/// covariance, then W = U * diag(1/sqrt(lambda)). Columns of U are ordered
/// by descending eigenvalue and signed so that each column's largest-magnitude
/// entry is positive. Throws TooFewSamples, DimensionMismatch, NonFinite or
/// RankDeficient.
WhiteningModel fit_whitening(std::span<const Embedding> keys, WhiteningOptions options = {});

Embedding apply_whitening(const WhiteningModel& model, std::span<const double> x);

/// Allocation-free variant; `out` must have model.dim entries.
void apply_whitening_into(const WhiteningModel& model, std::span<const double> x,
                          std::span<double> out);

}  // namespace nnose
