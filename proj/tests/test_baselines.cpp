#include <gtest/gtest.h>

#include <cmath>

#include "diffmap/baselines.hpp"
#include "diffmap/reduce.hpp"
#include "oracles.hpp"

using namespace diffmap;

namespace {

Matrix gaussian_points(std::uint64_t seed, Eigen::Index n, Eigen::Index dim) {
  Rng rng(seed);
  Matrix m(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < dim; ++c) m(i, c) = rng.normal();
  return m;
}

/// n points in a random d-dimensional affine subspace of R^D.
Matrix subspace_points(std::uint64_t seed, Eigen::Index n, Eigen::Index d, Eigen::Index big_d) {
  const Matrix latent = gaussian_points(seed, n, d);
  const Matrix mix = gaussian_points(seed + 1, d, big_d);
  const Matrix offset = gaussian_points(seed + 2, 1, big_d);
  return (latent * mix).rowwise() + offset.row(0);
}

Matrix two_clusters() {
  Matrix x(8, 2);
  x << 0, 0, 0.1, 0, 0, 0.1, 0.1, 0.1,  //
      5, 5, 5.1, 5, 5, 5.1, 5.1, 5.1;
  return x;
}

}  // namespace

TEST(Pca, ReconstructsLowRankData) {
  const Matrix x = subspace_points(1, 60, 3, 8);
  const auto e = embed_pca(DataMatrix(x), 3);
  const Matrix rebuilt = (e.coords * e.basis.transpose()).rowwise() + e.center.transpose();
  EXPECT_LE((rebuilt - x).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Pca, FullDimensionPreservesTotalVariance) {
  const Matrix x = gaussian_points(2, 40, 5);
  const auto e = embed_pca(DataMatrix(x), 5);
  const Matrix centered = x.rowwise() - x.colwise().mean();
  EXPECT_NEAR(e.coords.squaredNorm(), centered.squaredNorm(), 1e-9);
}

TEST(Pca, VariancesMatchScalarCovarianceOracle) {
  const Matrix x = gaussian_points(3, 30, 4);
  oracle::Mat cov = oracle::zeros(4, 4);
  std::vector<double> mean(4, 0.0);
  for (int i = 0; i < 30; ++i)
    for (int c = 0; c < 4; ++c) mean[c] += x(i, c) / 30.0;
  for (int i = 0; i < 30; ++i)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) cov[a][b] += (x(i, a) - mean[a]) * (x(i, b) - mean[b]) / 29.0;
  const auto ref = oracle::jacobi_eigenvalues(cov);
  const auto e = embed_pca(DataMatrix(x), 4);
  for (int j = 0; j < 4; ++j) {
    EXPECT_NEAR(e.eigenvalues(j), ref[j], 1e-10);
    double var = 0.0;
    for (int i = 0; i < 30; ++i) var += e.coords(i, j) * e.coords(i, j) / 29.0;
    EXPECT_NEAR(var, ref[j], 1e-10);
  }
}

TEST(Pca, TranslationInvariant) {
  const Matrix x = gaussian_points(4, 25, 3);
  const Matrix shifted = x.rowwise() + Eigen::RowVector3d(10, -3, 7);
  const auto a = embed_pca(DataMatrix(x), 2);
  const auto b = embed_pca(DataMatrix(shifted), 2);
  EXPECT_LE((a.coords - b.coords).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Pca, ProjectionOfTrainingDataMatchesCoords) {
  const DataMatrix x(gaussian_points(5, 20, 4));
  const auto e = embed_pca(x, 2);
  EXPECT_LE((pca_project(e, x) - e.coords).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pca, RejectsBadDimension) {
  const DataMatrix x(gaussian_points(6, 5, 3));
  EXPECT_THROW(embed_pca(x, 4), Error);
  EXPECT_THROW(embed_pca(x, 0), Error);
}

TEST(Lle, WeightRowsAreAffine) {
  const DataMatrix x(gaussian_points(7, 40, 5));
  const Matrix w = lle_weights(x, 6, 1e-3);
  for (int i = 0; i < 40; ++i) {
    EXPECT_NEAR(w.row(i).sum(), 1.0, 1e-10);
    EXPECT_EQ(w(i, i), 0.0);
    EXPECT_EQ((w.row(i).array() != 0.0).count(), 6);
  }
}

TEST(Lle, InteriorLinePointsAreMidpoints) {
  Matrix x(6, 2);
  for (int i = 0; i < 6; ++i) x.row(i) << i, 2.0 * i;
  const Matrix w = lle_weights(DataMatrix(x), 2, 1e-3);
  for (int i = 1; i < 5; ++i) {
    EXPECT_NEAR(w(i, i - 1), 0.5, 1e-9);
    EXPECT_NEAR(w(i, i + 1), 0.5, 1e-9);
  }
}

TEST(Lle, PreservesOrderAlongALine) {
  Matrix x(12, 3);
  for (int i = 0; i < 12; ++i) x.row(i) << 0.5 * i, -0.25 * i, 1.0 + 0.1 * i;
  BaselineConfig cfg;
  cfg.dim = 1;
  cfg.k_nn = 2;
  const auto e = embed_lle(DataMatrix(x), cfg);
  const Vector y = e.coords.col(0);
  const double dir = y(11) > y(0) ? 1.0 : -1.0;
  for (int i = 0; i + 1 < 12; ++i) EXPECT_GT(dir * (y(i + 1) - y(i)), 0.0) << "i=" << i;
}

TEST(Lle, DiscardedModeIsConstant) {
  const DataMatrix x(gaussian_points(8, 50, 4));
  BaselineConfig cfg;
  cfg.k_nn = 8;
  const auto spec = lle_spectrum(x, cfg, 3);
  EXPECT_NEAR(spec.eigenvalues(0), 0.0, 1e-9);
  const Vector v = spec.eigenvectors.col(0);
  EXPECT_LE(v.maxCoeff() - v.minCoeff(), 1e-6);
  EXPECT_LE(spec.eigenvalues(0), spec.eigenvalues(1));
}

TEST(Lle, TargetDimensionMayExceedNeighborhood) {
  BaselineConfig cfg;
  cfg.dim = 8;
  cfg.k_nn = 4;
  const auto e = embed_lle(DataMatrix(gaussian_points(9, 30, 6)), cfg);
  EXPECT_EQ(e.coords.cols(), 8);
  EXPECT_TRUE(e.coords.allFinite());
  cfg.lle_reg = -1.0;
  EXPECT_THROW(embed_lle(DataMatrix(gaussian_points(9, 30, 6)), cfg), Error);
}

TEST(Lem, TrivialModeIsZeroAndConstant) {
  const DataMatrix x(gaussian_points(10, 40, 3));
  BaselineConfig cfg;
  cfg.k_nn = 8;
  const auto spec = lem_spectrum(x, cfg, 4);
  EXPECT_NEAR(spec.eigenvalues(0), 0.0, 1e-10);
  const Vector v = spec.eigenvectors.col(0);
  EXPECT_LE(v.maxCoeff() - v.minCoeff(), 1e-8 * v.cwiseAbs().maxCoeff());
  for (int j = 0; j < 4; ++j) {
    EXPECT_GE(spec.eigenvalues(j), -1e-10);
    if (j > 0) EXPECT_LE(spec.eigenvalues(j - 1), spec.eigenvalues(j));
  }
}

TEST(Lem, SolvesGeneralizedProblem) {
  const DataMatrix x(gaussian_points(11, 30, 3));
  BaselineConfig cfg;
  cfg.k_nn = 6;
  const auto spec = lem_spectrum(x, cfg, 3);
  const Matrix w = lem_weights(x, 6, std::nullopt);
  const Vector deg = w.rowwise().sum();
  const Matrix lap = Matrix(deg.asDiagonal()) - w;
  for (int j = 0; j < 3; ++j) {
    const Vector v = spec.eigenvectors.col(j);
    EXPECT_LE((lap * v - spec.eigenvalues(j) * deg.asDiagonal() * v).norm(), 1e-9);
  }
}

TEST(Lem, FiedlerVectorSplitsTwoClusters) {
  BaselineConfig cfg;
  cfg.dim = 1;
  cfg.k_nn = 4;
  const auto e = embed_lem(DataMatrix(two_clusters()), cfg);
  const Vector y = e.coords.col(0);
  for (int i = 1; i < 4; ++i) EXPECT_GT(y(0) * y(i), 0.0);
  for (int i = 4; i < 8; ++i) EXPECT_LT(y(0) * y(i), 0.0);
}

TEST(Lem, RejectsDisconnectedGraph) {
  BaselineConfig cfg;
  cfg.dim = 1;
  cfg.k_nn = 2;
  try {
    embed_lem(DataMatrix(two_clusters()), cfg);
    FAIL() << "expected a disconnected-graph error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("2 components"), std::string::npos) << e.what();
  }
}

TEST(Reduce, ShapesAndFinitenessForEveryMethod) {
  const DataMatrix x(gaussian_points(12, 60, 6));
  for (Method m : {Method::DiffusionMaps, Method::Pca, Method::Lle, Method::Lem}) {
    ReducerConfig cfg;
    cfg.method = m;
    cfg.dim = 3;
    cfg.sigma = 2.0;
    cfg.k_nn = 10;
    const auto e = reduce(x, cfg);
    EXPECT_EQ(e.coords.rows(), 60) << method_name(m);
    EXPECT_EQ(e.coords.cols(), 3) << method_name(m);
    EXPECT_TRUE(e.coords.allFinite()) << method_name(m);
    EXPECT_EQ(e.method, m);
  }
  ReducerConfig id;
  id.method = Method::Identity;
  EXPECT_TRUE(reduce(x, id).coords.isApprox(x.values()));
}
