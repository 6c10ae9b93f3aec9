#pragma once

#include <optional>

#include "diffmap/baselines.hpp"
#include "diffmap/diffusion_maps.hpp"

namespace diffmap {

/// Every reducer's settings in one place; each method reads only its own.
struct ReducerConfig {
  Method method = Method::DiffusionMaps;
  Eigen::Index dim = 2;
  double sigma = 10.0;
  int t = 1;
  int k_nn = 12;
  std::optional<double> lem_sigma;
  double lle_reg = 1e-3;

  DmConfig dm() const { return DmConfig{sigma, t, dim}; }

  BaselineConfig baseline() const {
    BaselineConfig b;
    b.method = method;
    b.dim = dim;
    b.k_nn = k_nn;
    b.lem_sigma = lem_sigma;
    b.lle_reg = lle_reg;
    return b;
  }
};

inline Embedding reduce(const DataMatrix& data, const ReducerConfig& config) {
  switch (config.method) {
    case Method::DiffusionMaps: return embed(data, config.dm());
    case Method::Pca: return embed_pca(data, config.dim);
    case Method::Lle: return embed_lle(data, config.baseline());
    case Method::Lem: return embed_lem(data, config.baseline());
    case Method::Identity: {
      Embedding out;
      out.method = Method::Identity;
      out.coords = data.values();
      return out;
    }
  }
  throw Error("unhandled reducer");
}

}  // namespace diffmap
