#pragma once

#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "diffmap/numerics.hpp"

namespace diffmap {

/// Shortest decimal text that reads back to the same double.
inline std::string shortest_real(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

enum class Method { DiffusionMaps, Pca, Lle, Lem, Identity };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::DiffusionMaps: return "DM";
    case Method::Pca: return "PCA";
    case Method::Lle: return "LLE";
    case Method::Lem: return "LEM";
    case Method::Identity: return "identity";
  }
  return "?";
}

/// Accepts the canonical names and their lower-case spellings.
inline Method parse_method(std::string_view text) {
  std::string s(text);
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "dm" || s == "diffusion" || s == "diffusion_maps") return Method::DiffusionMaps;
  if (s == "pca") return Method::Pca;
  if (s == "lle") return Method::Lle;
  if (s == "lem" || s == "laplacian") return Method::Lem;
  if (s == "identity" || s == "none") return Method::Identity;
  throw Error("unknown method '" + std::string(text) + "' (expected dm, pca, lle, lem or identity)");
}

struct DmConfig {
  double sigma = 10.0;  ///< Gaussian kernel width
  int t = 1;            ///< diffusion time steps
  Eigen::Index dim = 2;

  void validate(Eigen::Index n) const {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
      throw Error("diffusion maps sigma must be positive, got " + std::to_string(sigma));
    if (t < 1) throw Error("diffusion time t must be >= 1, got " + std::to_string(t));
    if (dim < 1) throw Error("target dimension must be >= 1");
    if (dim >= n - 1)
      throw Error("diffusion maps needs d < n - 1 (one trivial mode is discarded); got d=" +
                  std::to_string(dim) + ", n=" + std::to_string(n));
  }
};

/// Reduced coordinates plus the spectral data that produced them.
///
/// `eigenvalues(j)` pairs with `coords.col(j)`. For diffusion maps these are
/// the retained non-trivial eigenvalues of the Markov matrix, descending; for
/// LLE and LEM they are the (ascending) bottom eigenvalues of the respective
/// operator; for PCA they are the projected variances. `basis` and `center`
/// are filled only by PCA (principal directions as columns, and the mean).
struct Embedding {
  Method method = Method::Identity;
  Matrix coords;
  Vector eigenvalues;
  Matrix basis;
  Vector center;
  std::optional<DmConfig> dm;
  std::map<std::string, std::string> params;

  Eigen::Index rows() const { return coords.rows(); }
  Eigen::Index dim() const { return coords.cols(); }
};

}  // namespace diffmap
