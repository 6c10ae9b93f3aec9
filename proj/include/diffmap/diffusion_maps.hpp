#pragma once

// Diffusion maps: Gaussian kernel graph, row-stochastic random walk,
// t-step diffusion distances and the eigenvalue-scaled spectral embedding.
//
// The walk P = M^-1 W is not symmetric, but it is similar to
// S = M^-1/2 W M^-1/2, which is. Eigenpairs come from S and are mapped back
// to right eigenvectors of P as psi = sqrt(sum m) M^-1/2 u. With that scaling
// the embedding distance |y_i - y_j| over all non-trivial modes equals the
// diffusion distance between i and j, where the density weight is the
// stationary measure m_k / sum m.

#include <cmath>
#include <string>

#include "diffmap/embedding.hpp"
#include "diffmap/numerics.hpp"

namespace diffmap {

/// Gaussian kernel W, its row normalization P and the degrees m_i = sum_j W_ij.
struct MarkovOperator {
  Matrix kernel;
  Matrix transition;
  Vector degrees;
  double sigma = 1.0;

  Eigen::Index size() const { return kernel.rows(); }

  /// Stationary distribution of the walk, m / sum(m).
  Vector stationary() const { return degrees / degrees.sum(); }
};

inline MarkovOperator build_kernel(const DataMatrix& data, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw Error("kernel width sigma must be positive, got " + std::to_string(sigma));
  if (data.rows() < 2) throw Error("kernel needs at least two points");

  MarkovOperator op;
  op.sigma = sigma;
  op.kernel = pairwise_sq_dists(data);
  const double scale = -1.0 / (2.0 * sigma * sigma);
  op.kernel = (op.kernel.array() * scale).exp().matrix();
  op.degrees = op.kernel.rowwise().sum();
  op.transition = op.degrees.cwiseInverse().asDiagonal() * op.kernel;
  return op;
}

/// P^t by repeated right multiplication.
inline Matrix transition_power(const MarkovOperator& op, int t) {
  if (t < 1) throw Error("transition power needs t >= 1, got " + std::to_string(t));
  Matrix out = op.transition;
  for (int step = 1; step < t; ++step) out = out * op.transition;
  return out;
}

/// Row i of P^t, computed as t vector-matrix products without forming P^t.
inline Eigen::RowVectorXd transition_row(const MarkovOperator& op, int t, Eigen::Index i) {
  if (t < 1) throw Error("transition power needs t >= 1, got " + std::to_string(t));
  if (i < 0 || i >= op.size()) throw Error("point index " + std::to_string(i) + " out of range");
  Eigen::RowVectorXd row = op.transition.row(i);
  for (int step = 1; step < t; ++step) row = row * op.transition;
  return row;
}

/// D_t(x_i, x_j) = sqrt( sum_k (P^t_ik - P^t_jk)^2 / phi0_k ), phi0 = m / sum(m).
inline double diffusion_distance(const MarkovOperator& op, int t, Eigen::Index i,
                                 Eigen::Index j) {
  if (j < 0 || j >= op.size()) throw Error("point index " + std::to_string(j) + " out of range");
  if (i == j) return 0.0;
  const Eigen::RowVectorXd ri = transition_row(op, t, i);
  const Eigen::RowVectorXd rj = transition_row(op, t, j);
  const Vector phi0 = op.stationary();
  double s = 0.0;
  for (Eigen::Index k = 0; k < op.size(); ++k) {
    const double diff = ri(k) - rj(k);
    s += diff * diff / phi0(k);
  }
  return std::sqrt(s);
}

/// Leading eigenpairs of P, including the trivial one.
struct DiffusionSpectrum {
  Vector eigenvalues;    ///< descending, eigenvalues(0) == 1
  Matrix right_vectors;  ///< P psi = lambda psi, with sum_i phi0_i psi_i^2 = 1
};

/// Symmetric conjugate S = M^-1/2 W M^-1/2 of the walk.
inline Matrix symmetric_conjugate(const MarkovOperator& op) {
  const Vector inv_sqrt = op.degrees.cwiseSqrt().cwiseInverse();
  Matrix s = inv_sqrt.asDiagonal() * op.kernel * inv_sqrt.asDiagonal();
  // exact symmetry; the two triangles can differ in the last bit
  return 0.5 * (s + s.transpose());
}

inline DiffusionSpectrum diffusion_spectrum(const MarkovOperator& op, Eigen::Index count) {
  const SpectralDecomposition sym = top_eigenpairs(symmetric_conjugate(op), count);
  DiffusionSpectrum out;
  out.eigenvalues = sym.eigenvalues;
  const double total = op.degrees.sum();
  const Vector scale = (total / op.degrees.array()).sqrt().matrix();
  out.right_vectors = scale.asDiagonal() * sym.eigenvectors;
  return out;
}

/// Diffusion coordinates lambda_j^t psi_j for the `count` leading non-trivial
/// modes (count may be as large as n - 1).
inline Matrix diffusion_coordinates(const DiffusionSpectrum& spectrum, int t, Eigen::Index count) {
  if (count < 1 || count + 1 > spectrum.eigenvalues.size())
    throw Error("requested " + std::to_string(count) + " diffusion coordinates from " +
                std::to_string(spectrum.eigenvalues.size()) + " eigenpairs");
  if (t < 1) throw Error("diffusion time t must be >= 1");
  Matrix coords = spectrum.right_vectors.middleCols(1, count);
  for (Eigen::Index j = 0; j < count; ++j)
    coords.col(j) *= std::pow(spectrum.eigenvalues(j + 1), t);
  return coords;
}

inline Embedding embed(const DataMatrix& data, const DmConfig& config) {
  config.validate(data.rows());
  const MarkovOperator op = build_kernel(data, config.sigma);
  const DiffusionSpectrum spectrum = diffusion_spectrum(op, config.dim + 1);

  Embedding out;
  out.method = Method::DiffusionMaps;
  out.coords = diffusion_coordinates(spectrum, config.t, config.dim);
  out.eigenvalues = spectrum.eigenvalues.segment(1, config.dim);
  out.dm = config;
  out.params = {{"sigma", shortest_real(config.sigma)},
                {"t", std::to_string(config.t)},
                {"d", std::to_string(config.dim)}};
  return out;
}

/// Out-of-sample extension of a diffusion-maps embedding: each new point's
/// coordinate j is (1 / lambda_j) * sum_i p(new, i) y_ij, where p is the
/// row-normalized kernel between the new point and the training points.
inline Embedding nystrom_extend(const Embedding& train_embedding, const DataMatrix& train_data,
                                const DataMatrix& new_points) {
  if (train_embedding.method != Method::DiffusionMaps || !train_embedding.dm)
    throw Error("Nystrom extension needs a diffusion-maps embedding");
  if (train_embedding.rows() != train_data.rows())
    throw Error("training embedding has " + std::to_string(train_embedding.rows()) +
                " rows but training data has " + std::to_string(train_data.rows()));
  if (new_points.cols() != train_data.cols())
    throw Error("dimension mismatch: new points have " + std::to_string(new_points.cols()) +
                " columns, training data has " + std::to_string(train_data.cols()));
  const double sigma = train_embedding.dm->sigma;
  Matrix kernel = cross_sq_dists(new_points, train_data);
  kernel = (kernel.array() * (-1.0 / (2.0 * sigma * sigma))).exp().matrix();
  const Vector row_sums = kernel.rowwise().sum();
  for (Eigen::Index i = 0; i < row_sums.size(); ++i)
    if (!(row_sums(i) > 0.0))
      throw Error("new point " + std::to_string(i) +
                  " has zero kernel weight to every training point");
  const Matrix transition = row_sums.cwiseInverse().asDiagonal() * kernel;

  Embedding out = train_embedding;
  out.coords = transition * train_embedding.coords;
  for (Eigen::Index j = 0; j < out.coords.cols(); ++j) {
    const double lambda = train_embedding.eigenvalues(j);
    if (lambda == 0.0) throw Error("cannot extend a mode with zero eigenvalue");
    out.coords.col(j) /= lambda;
  }
  return out;
}

}  // namespace diffmap
