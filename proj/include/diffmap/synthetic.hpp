#pragma once

// Benchmark manifolds with known intrinsic coordinates, and a
// neighborhood-preservation score against those coordinates.

#include <algorithm>
#include <cmath>
#include <iterator>
#include <cstdint>
#include <string>
#include <vector>

#include "diffmap/numerics.hpp"

namespace diffmap {

struct SyntheticSample {
  DataMatrix points;  ///< n x 3
  Matrix intrinsic;   ///< n x 2 ground-truth chart
  std::string name;
  std::uint64_t seed = 0;
};

inline constexpr double kPi = 3.14159265358979323846;

/// Tenenbaum's Swiss roll: s ~ U[3pi/2, 9pi/2], h ~ U[0, 21],
/// point (s cos s, h, s sin s), intrinsic (s, h).
inline SyntheticSample swiss_roll(Eigen::Index n, std::uint64_t seed) {
  if (n < 10) throw Error("swiss roll needs n >= 10, got " + std::to_string(n));
  Rng rng(seed);
  Matrix pts(n, 3);
  Matrix intrinsic(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = 1.5 * kPi * (1.0 + 2.0 * rng.uniform());
    const double h = 21.0 * rng.uniform();
    pts(i, 0) = s * std::cos(s);
    pts(i, 1) = h;
    pts(i, 2) = s * std::sin(s);
    intrinsic(i, 0) = s;
    intrinsic(i, 1) = h;
  }
  return {DataMatrix(std::move(pts)), std::move(intrinsic), "swiss_roll", seed};
}

// Punctured sphere sampling profile. The polar angle theta (0 at the north
// pole) covers [pi/3, pi], i.e. z in [-1, 1/2], the bottom three quarters of
// the sphere by area. Its density is proportional to
//   sin(theta) * (kRimFloor + (1 - kRimFloor) * (pi - theta) / (2pi/3)),
// so the ramp is 1 at the rim and kRimFloor at the bottom pole.
inline constexpr double kSphereRimTheta = kPi / 3.0;
inline constexpr double kRimFloor = 0.1;

inline double punctured_sphere_density(double theta) {
  const double ramp =
      kRimFloor + (1.0 - kRimFloor) * (kPi - theta) / (kPi - kSphereRimTheta);
  return std::sin(theta) * ramp;
}

/// Bottom 3/4 of the unit sphere, densest at the top rim, z scaled by
/// `height_scale`. The intrinsic chart is the azimuthal equidistant
/// projection about the south pole: ((pi - theta) cos phi, (pi - theta) sin phi),
/// which encodes (azimuth, polar angle) without the azimuth wrap-around.
inline SyntheticSample punctured_sphere(Eigen::Index n, double height_scale, std::uint64_t seed) {
  if (n < 10) throw Error("punctured sphere needs n >= 10, got " + std::to_string(n));
  if (!(height_scale > 0.0))
    throw Error("punctured sphere height scale must be positive, got " +
                std::to_string(height_scale));
  Rng rng(seed);
  // the density is below 1 everywhere on [pi/3, pi]
  constexpr double bound = 1.0;
  Matrix pts(n, 3);
  Matrix intrinsic(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    double theta = 0.0;
    for (;;) {
      theta = rng.uniform(kSphereRimTheta, kPi);
      if (rng.uniform() * bound < punctured_sphere_density(theta)) break;
    }
    const double phi = 2.0 * kPi * rng.uniform();
    pts(i, 0) = std::sin(theta) * std::cos(phi);
    pts(i, 1) = std::sin(theta) * std::sin(phi);
    pts(i, 2) = height_scale * std::cos(theta);
    const double r = kPi - theta;
    intrinsic(i, 0) = r * std::cos(phi);
    intrinsic(i, 1) = r * std::sin(phi);
  }
  return {DataMatrix(std::move(pts)), std::move(intrinsic), "punctured_sphere", seed};
}

/// Mean over points of |kNN_embedding(i) & kNN_intrinsic(i)| / k_eval.
/// Neighbor ties resolve to the lower index.
inline double embedding_quality(const Matrix& embedding, const Matrix& intrinsic, int k_eval) {
  const Eigen::Index n = embedding.rows();
  if (intrinsic.rows() != n)
    throw Error("embedding has " + std::to_string(n) + " rows but intrinsic coordinates have " +
                std::to_string(intrinsic.rows()));
  if (k_eval < 1 || k_eval >= n)
    throw Error("k_eval must be in [1, n - 1], got " + std::to_string(k_eval));
  const Matrix de = pairwise_sq_dists(DataMatrix(embedding));
  const Matrix di = pairwise_sq_dists(DataMatrix(intrinsic));
  std::vector<double> hits(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t ui) {
    const auto i = static_cast<Eigen::Index>(ui);
    auto a = nearest_indices(de.row(i).transpose(), static_cast<std::size_t>(k_eval), i);
    auto b = nearest_indices(di.row(i).transpose(), static_cast<std::size_t>(k_eval), i);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<Eigen::Index> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    hits[ui] = static_cast<double>(common.size()) / k_eval;
  });
  double total = 0.0;
  for (double h : hits) total += h;
  return total / static_cast<double>(n);
}

}  // namespace diffmap
