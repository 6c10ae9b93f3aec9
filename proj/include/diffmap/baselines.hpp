#pragma once

// Comparison reducers: PCA, Locally Linear Embedding and Laplacian
// Eigenmaps, each returning the same Embedding type as diffusion maps.

#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "diffmap/embedding.hpp"
#include "diffmap/numerics.hpp"

namespace diffmap {

struct BaselineConfig {
  Method method = Method::Pca;
  Eigen::Index dim = 2;
  int k_nn = 12;
  std::optional<double> lem_sigma;  ///< unset: mean distance to the k_nn neighbors
  double lle_reg = 1e-3;            ///< relative to the trace of the local Gram matrix

  void validate(Eigen::Index n) const {
    if (dim < 1) throw Error("target dimension must be >= 1");
    if (method == Method::Pca) return;
    if (k_nn < 1) throw Error("k_nn must be >= 1, got " + std::to_string(k_nn));
    if (k_nn >= n)
      throw Error("k_nn must be smaller than the number of points (k_nn=" + std::to_string(k_nn) +
                  ", n=" + std::to_string(n) + ")");
    // d may exceed k_nn for LLE: the regularized weights stay well defined
    if (method == Method::Lle && !(lle_reg >= 0.0)) throw Error("LLE regularization must be >= 0");
    if (method == Method::Lem && lem_sigma && !(*lem_sigma > 0.0))
      throw Error("LEM heat-kernel sigma must be positive");
    if (dim + 1 > n)
      throw Error("target dimension d=" + std::to_string(dim) + " needs at least " +
                  std::to_string(dim + 1) + " points");
  }
};

/// Each point's k nearest other points, closest first (ties: lower index).
struct NeighborGraph {
  std::vector<std::vector<Eigen::Index>> neighbors;
  Matrix sq_dists;
};

inline NeighborGraph knn_graph(const DataMatrix& data, int k) {
  NeighborGraph g;
  g.sq_dists = pairwise_sq_dists(data);
  g.neighbors.resize(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index i = 0; i < data.rows(); ++i)
    g.neighbors[static_cast<std::size_t>(i)] =
        nearest_indices(g.sq_dists.row(i).transpose(), static_cast<std::size_t>(k), i);
  return g;
}

// ---------------------------------------------------------------------------
// PCA

inline Embedding embed_pca(const DataMatrix& data, Eigen::Index dim) {
  const Eigen::Index n = data.rows();
  if (n < 2) throw Error("PCA needs at least two points");
  if (dim < 1 || dim > std::min(n - 1, data.cols()))
    throw Error("PCA target dimension must be in [1, min(n - 1, D)] = [1, " +
                std::to_string(std::min(n - 1, data.cols())) + "], got " + std::to_string(dim));

  Embedding out;
  out.method = Method::Pca;
  out.center = data.values().colwise().mean().transpose();
  const Matrix centered = data.values().rowwise() - out.center.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose());
  const SpectralDecomposition spec = top_eigenpairs(cov, dim);
  out.basis = spec.eigenvectors;
  out.eigenvalues = spec.eigenvalues;
  out.coords = centered * out.basis;
  out.params = {{"d", std::to_string(dim)}};
  return out;
}

/// Projects new points onto an existing PCA basis.
inline Matrix pca_project(const Embedding& pca, const DataMatrix& points) {
  if (pca.method != Method::Pca) throw Error("projection needs a PCA embedding");
  if (points.cols() != pca.center.size())
    throw Error("dimension mismatch: " + std::to_string(points.cols()) + " vs " +
                std::to_string(pca.center.size()));
  return (points.values().rowwise() - pca.center.transpose()) * pca.basis;
}

// ---------------------------------------------------------------------------
// LLE

/// Reconstruction weights: row i holds the affine weights (summing to one)
/// that best rebuild x_i from its k_nn neighbors, with Tikhonov term
/// reg * trace(C) on the local Gram matrix C.
inline Matrix lle_weights(const DataMatrix& data, int k_nn, double reg) {
  const Eigen::Index n = data.rows();
  if (k_nn < 1 || k_nn >= n)
    throw Error("k_nn must be in [1, n - 1], got " + std::to_string(k_nn));
  const NeighborGraph g = knn_graph(data, k_nn);
  Matrix w = Matrix::Zero(n, n);
  const auto k = static_cast<Eigen::Index>(k_nn);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& nb = g.neighbors[static_cast<std::size_t>(i)];
    Matrix z(k, data.cols());
    for (Eigen::Index a = 0; a < k; ++a)
      z.row(a) = data.row(nb[static_cast<std::size_t>(a)]) - data.row(i);
    Matrix gram = z * z.transpose();
    const double trace = gram.trace();
    // all neighbors coincide with x_i: fall back to an absolute ridge
    const double ridge = trace > 0.0 ? reg * trace : (reg > 0.0 ? reg : 1.0);
    gram.diagonal().array() += ridge;
    Vector weights = gram.ldlt().solve(Vector::Ones(k));
    double total = weights.sum();
    if (!weights.allFinite() || std::abs(total) < 1e-300) {
      weights = Vector::Ones(k);
      total = static_cast<double>(k);
    }
    weights /= total;
    for (Eigen::Index a = 0; a < k; ++a) w(i, nb[static_cast<std::size_t>(a)]) = weights(a);
  }
  return w;
}

/// Bottom `count` eigenpairs of (I - W)^T (I - W), ascending. The first is
/// the constant vector with eigenvalue zero.
inline SpectralDecomposition lle_spectrum(const DataMatrix& data, const BaselineConfig& config,
                                          Eigen::Index count) {
  const Eigen::Index n = data.rows();
  Matrix iw = Matrix::Identity(n, n) - lle_weights(data, config.k_nn, config.lle_reg);
  Matrix cost = iw.transpose() * iw;
  cost = 0.5 * (cost + cost.transpose());
  return bottom_eigenpairs(cost, count);
}

inline Embedding embed_lle(const DataMatrix& data, BaselineConfig config) {
  config.method = Method::Lle;
  config.validate(data.rows());
  const SpectralDecomposition spec = lle_spectrum(data, config, config.dim + 1);
  Embedding out;
  out.method = Method::Lle;
  out.coords = spec.eigenvectors.rightCols(config.dim);
  out.eigenvalues = spec.eigenvalues.tail(config.dim);
  out.params = {{"d", std::to_string(config.dim)},
                {"knn", std::to_string(config.k_nn)},
                {"lle_reg", shortest_real(config.lle_reg)}};
  return out;
}

// ---------------------------------------------------------------------------
// Laplacian eigenmaps

/// Connected-component label per node of a symmetric weight matrix
/// (edges are the strictly positive off-diagonal entries).
inline std::vector<int> connected_components(const Matrix& weights, int* count = nullptr) {
  const Eigen::Index n = weights.rows();
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  int next = 0;
  std::vector<Eigen::Index> stack;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    label[static_cast<std::size_t>(s)] = next;
    stack.push_back(s);
    while (!stack.empty()) {
      const Eigen::Index u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < n; ++v) {
        if (v != u && weights(u, v) > 0.0 && label[static_cast<std::size_t>(v)] < 0) {
          label[static_cast<std::size_t>(v)] = next;
          stack.push_back(v);
        }
      }
    }
    ++next;
  }
  if (count) *count = next;
  return label;
}

/// Heat-kernel weights on the union-symmetrized k_nn graph.
inline Matrix lem_weights(const DataMatrix& data, int k_nn, std::optional<double> sigma,
                          double* used_sigma = nullptr) {
  const Eigen::Index n = data.rows();
  if (k_nn < 1 || k_nn >= n)
    throw Error("k_nn must be in [1, n - 1], got " + std::to_string(k_nn));
  const NeighborGraph g = knn_graph(data, k_nn);
  double width = 0.0;
  if (sigma) {
    width = *sigma;
  } else {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j : g.neighbors[static_cast<std::size_t>(i)])
        total += std::sqrt(g.sq_dists(i, j));
    width = total / static_cast<double>(n * k_nn);
    if (!(width > 0.0)) width = 1.0;  // every neighborhood is a stack of duplicates
  }
  if (used_sigma) *used_sigma = width;
  const double scale = -1.0 / (2.0 * width * width);
  Matrix w = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j : g.neighbors[static_cast<std::size_t>(i)]) {
      const double v = std::exp(g.sq_dists(i, j) * scale);
      w(i, j) = v;
      w(j, i) = v;
    }
  }
  return w;
}

/// Generalized eigenpairs of L v = lambda D v, ascending, smallest first.
/// Vectors are D-orthonormal (v^T D v = 1).
inline SpectralDecomposition lem_spectrum(const DataMatrix& data, const BaselineConfig& config,
                                          Eigen::Index count, double* used_sigma = nullptr) {
  const Matrix w = lem_weights(data, config.k_nn, config.lem_sigma, used_sigma);
  int components = 0;
  connected_components(w, &components);
  if (components > 1)
    throw Error("Laplacian eigenmaps neighborhood graph is disconnected (" +
                std::to_string(components) + " components); increase k_nn");
  const Vector degrees = w.rowwise().sum();
  const Vector inv_sqrt = degrees.cwiseSqrt().cwiseInverse();
  // I - D^-1/2 L D^-1/2 = D^-1/2 W D^-1/2: its top eigenpairs are the bottom of the pencil
  Matrix affinity = inv_sqrt.asDiagonal() * w * inv_sqrt.asDiagonal();
  affinity = 0.5 * (affinity + affinity.transpose());
  SpectralDecomposition spec = top_eigenpairs(affinity, count);
  spec.eigenvalues = (1.0 - spec.eigenvalues.array()).matrix();
  spec.eigenvectors = inv_sqrt.asDiagonal() * spec.eigenvectors;
  return spec;
}

inline Embedding embed_lem(const DataMatrix& data, BaselineConfig config) {
  config.method = Method::Lem;
  config.validate(data.rows());
  double sigma = 0.0;
  const SpectralDecomposition spec = lem_spectrum(data, config, config.dim + 1, &sigma);
  Embedding out;
  out.method = Method::Lem;
  out.coords = spec.eigenvectors.rightCols(config.dim);
  out.eigenvalues = spec.eigenvalues.tail(config.dim);
  out.params = {{"d", std::to_string(config.dim)},
                {"knn", std::to_string(config.k_nn)},
                {"lem_sigma", shortest_real(sigma)}};
  return out;
}

}  // namespace diffmap
