#include "nnose/whitening.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "nnose/error.hpp"

namespace nnose {

WhiteningModel WhiteningModel::identity(std::size_t dim) {
  WhiteningModel m;
  m.dim = dim;
  m.mean.assign(dim, 0.0);
  m.transform.assign(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) m.transform[i * dim + i] = 1.0;
  return m;
}

WhiteningModel fit_whitening(std::span<const Embedding> keys, WhiteningOptions options) {
  const std::size_t n = keys.size();
  if (n < 2) throw Error(ErrorCode::TooFewSamples, "need at least 2 keys, got " + std::to_string(n));
  const std::size_t dim = keys.front().size();
  if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "zero-dimensional keys");

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& k : keys) {
    if (k.size() != dim) {
      throw Error(ErrorCode::DimensionMismatch, std::to_string(k.size()) + " vs " + std::to_string(dim));
    }
    for (std::size_t j = 0; j < dim; ++j) {
      if (!std::isfinite(k[j])) throw Error(ErrorCode::NonFinite, "non-finite key entry");
      mean[static_cast<Eigen::Index>(j)] += k[j];
    }
  }
  mean /= static_cast<double>(n);

  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd centered(d);
  for (const auto& k : keys) {
    for (Eigen::Index j = 0; j < d; ++j) centered[j] = k[static_cast<std::size_t>(j)] - mean[j];
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n);

  // Sigma is symmetric positive semi-definite, so its SVD coincides with the
  // eigendecomposition U diag(lambda) U^T.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::RankDeficient, "eigendecomposition did not converge");
  }
  const Eigen::VectorXd& evals = eig.eigenvalues();  // ascending
  const Eigen::MatrixXd& evecs = eig.eigenvectors();
  const double largest = evals[d - 1];
  if (!(largest > 0.0) || !std::isfinite(largest)) {
    throw Error(ErrorCode::RankDeficient, "covariance is zero");
  }
  const double floor = options.rank_tolerance * largest;

  WhiteningModel model;
  model.dim = dim;
  model.mean.assign(mean.data(), mean.data() + d);
  model.transform.assign(dim * dim, 0.0);
  for (Eigen::Index c = 0; c < d; ++c) {
    const Eigen::Index src = d - 1 - c;
    const double lambda = evals[src];
    if (lambda < floor) {
      throw Error(ErrorCode::RankDeficient, "eigenvalue " + std::to_string(lambda) +
                                                " below tolerance " + std::to_string(floor));
    }
    Eigen::Index pivot = 0;
    for (Eigen::Index r = 1; r < d; ++r) {
      if (std::abs(evecs(r, src)) > std::abs(evecs(pivot, src))) pivot = r;
    }
    const double sign = evecs(pivot, src) < 0.0 ? -1.0 : 1.0;
    const double scale = sign / std::sqrt(lambda);
    for (Eigen::Index r = 0; r < d; ++r) {
      model.transform[static_cast<std::size_t>(r) * dim + static_cast<std::size_t>(c)] =
          evecs(r, src) * scale;
    }
  }
  return model;
}

void apply_whitening_into(const WhiteningModel& model, std::span<const double> x,
                          std::span<double> out) {
  if (x.size() != model.dim || out.size() != model.dim) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(x.size()) + " vs model dim " + std::to_string(model.dim));
  }
  const std::size_t dim = model.dim;
  for (std::size_t j = 0; j < dim; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double c = x[i] - model.mean[i];
    const double* row = model.transform.data() + i * dim;
    for (std::size_t j = 0; j < dim; ++j) out[j] += c * row[j];
  }
}

Embedding apply_whitening(const WhiteningModel& model, std::span<const double> x) {
  Embedding out(model.dim);
  apply_whitening_into(model, x, out);
  return out;
}

}  // namespace nnose
