#pragma once

// KNN multi-label annotation: dataset model, prune-and-split protocol,
// label voting over retrieved neighbors and ranking-based Average Precision.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "diffmap/reduce.hpp"

namespace diffmap {

struct LabeledDataset {
  std::vector<std::string> ids;
  DataMatrix features;
  std::vector<std::vector<int>> labels;  ///< sorted, unique concept indices per image
  std::vector<std::string> vocabulary;

  std::size_t size() const { return ids.size(); }

  void validate() const {
    if (static_cast<std::size_t>(features.rows()) != ids.size() || labels.size() != ids.size())
      throw Error("dataset has " + std::to_string(ids.size()) + " ids, " +
                  std::to_string(features.rows()) + " feature rows and " +
                  std::to_string(labels.size()) + " label lists");
    const int v = static_cast<int>(vocabulary.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
      for (int l : labels[i])
        if (l < 0 || l >= v)
          throw Error("image '" + ids[i] + "' has concept index " + std::to_string(l) +
                      " outside the vocabulary of " + std::to_string(v));
  }

  /// Rows `rows` of this dataset, in the given order.
  LabeledDataset subset(const std::vector<std::size_t>& rows) const {
    LabeledDataset out;
    out.vocabulary = vocabulary;
    Matrix m(static_cast<Eigen::Index>(rows.size()), features.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      m.row(static_cast<Eigen::Index>(r)) = features.row(static_cast<Eigen::Index>(rows[r]));
      out.ids.push_back(ids[rows[r]]);
      out.labels.push_back(labels[rows[r]]);
    }
    out.features = DataMatrix(std::move(m));
    return out;
  }
};

/// Normalizes a raw label list: sorted, duplicates removed.
inline std::vector<int> canonical_labels(std::vector<int> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

struct SplitDataset {
  LabeledDataset train;
  LabeledDataset test;
  std::uint64_t seed = 0;
  int prune_min = 5;
};

/// Drops images with fewer than `prune_min` labels, shuffles the rest with
/// `seed` and gives the first ceil(n/2) to training, the remainder to test.
inline SplitDataset prune_and_split(const LabeledDataset& data, int prune_min, std::uint64_t seed) {
  data.validate();
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (static_cast<int>(data.labels[i].size()) >= prune_min) keep.push_back(i);
  if (keep.size() < 2)
    throw Error("pruning with prune_min=" + std::to_string(prune_min) + " leaves " +
                std::to_string(keep.size()) + " of " + std::to_string(data.size()) +
                " images; at least 2 are needed");
  Rng rng(seed);
  rng.shuffle(keep);
  const std::size_t n_train = (keep.size() + 1) / 2;
  SplitDataset out;
  out.train = data.subset({keep.begin(), keep.begin() + static_cast<std::ptrdiff_t>(n_train)});
  out.test = data.subset({keep.begin() + static_cast<std::ptrdiff_t>(n_train), keep.end()});
  out.seed = seed;
  out.prune_min = prune_min;
  return out;
}

// ---------------------------------------------------------------------------
// KNN annotation

struct LabelScore {
  int label = 0;
  int votes = 0;
};

struct Annotation {
  std::vector<LabelScore> ranked;       ///< whole vocabulary, best first
  std::vector<Eigen::Index> neighbors;  ///< retrieved training rows, closest first

  std::vector<int> top(std::size_t count) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < std::min(count, ranked.size()); ++i) out.push_back(ranked[i].label);
    return out;
  }

  std::vector<int> order() const { return top(ranked.size()); }
};

inline std::vector<int> label_frequencies(const std::vector<std::vector<int>>& labels,
                                          std::size_t vocabulary_size) {
  std::vector<int> freq(vocabulary_size, 0);
  for (const auto& ls : labels)
    for (int l : ls) ++freq[static_cast<std::size_t>(l)];
  return freq;
}

/// Votes the labels of the k nearest training rows (Euclidean; ties at equal
/// distance keep the lower row). Labels rank by votes, then by training
/// frequency, then by vocabulary index.
inline Annotation knn_annotate(const Matrix& train_coords,
                               const std::vector<std::vector<int>>& train_labels,
                               const std::vector<int>& train_frequency,
                               const Eigen::Ref<const Eigen::RowVectorXd>& query, int k) {
  if (query.size() != train_coords.cols())
    throw Error("query has dimension " + std::to_string(query.size()) + ", training data has " +
                std::to_string(train_coords.cols()));
  if (k < 1 || k > train_coords.rows())
    throw Error("k must be in [1, " + std::to_string(train_coords.rows()) + "], got " +
                std::to_string(k));
  Vector dists(train_coords.rows());
  for (Eigen::Index i = 0; i < train_coords.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < query.size(); ++c) {
      const double diff = train_coords(i, c) - query(c);
      s += diff * diff;
    }
    dists(i) = s;
  }
  Annotation out;
  out.neighbors = nearest_indices(dists, static_cast<std::size_t>(k));
  const std::size_t vocab = train_frequency.size();
  std::vector<int> votes(vocab, 0);
  for (Eigen::Index nb : out.neighbors)
    for (int l : train_labels[static_cast<std::size_t>(nb)]) ++votes[static_cast<std::size_t>(l)];
  out.ranked.reserve(vocab);
  for (std::size_t l = 0; l < vocab; ++l) out.ranked.push_back({static_cast<int>(l), votes[l]});
  std::sort(out.ranked.begin(), out.ranked.end(), [&](const LabelScore& a, const LabelScore& b) {
    if (a.votes != b.votes) return a.votes > b.votes;
    const int fa = train_frequency[static_cast<std::size_t>(a.label)];
    const int fb = train_frequency[static_cast<std::size_t>(b.label)];
    if (fa != fb) return fa > fb;
    return a.label < b.label;
  });
  return out;
}

inline Annotation knn_annotate(const LabeledDataset& train,
                               const Eigen::Ref<const Eigen::RowVectorXd>& query, int k) {
  return knn_annotate(train.features.values(), train.labels,
                      label_frequencies(train.labels, train.vocabulary.size()), query, k);
}

/// (1/|T|) * sum over truth labels l of |{truth labels ranked at or before l}| / rank(l).
/// Empty truth has no AP.
inline std::optional<double> average_precision(const std::vector<int>& ranking,
                                               const std::vector<int>& truth) {
  const std::set<int> want(truth.begin(), truth.end());
  if (want.empty()) return std::nullopt;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    if (want.count(ranking[r])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits != want.size())
    throw Error("ranking does not contain every ground-truth label");
  return sum / static_cast<double>(want.size());
}

// ---------------------------------------------------------------------------
// pipeline

enum class OutOfSample { Transductive, Nystrom };

struct ImageResult {
  std::string id;
  std::vector<LabelScore> ranked;
  std::vector<int> keywords;
  std::optional<double> ap;
  double precision_at_5 = 0.0;
  double recall_at_5 = 0.0;
};

struct AnnotationReport {
  std::vector<ImageResult> images;
  double mean_ap = 0.0;
  double precision_at_5 = 0.0;
  double recall_at_5 = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::size_t n_evaluated = 0;
  std::size_t n_skipped = 0;  ///< test images with empty ground truth
  int k = 0;
  Eigen::Index dim = 0;
  Method method = Method::Identity;
  std::string feature;
};

inline constexpr std::size_t kKeywordsPerImage = 5;

/// Reduced coordinates for the training and test halves. Transductive mode
/// fits on both halves stacked; Nystrom mode fits on training rows only and
/// maps test rows through the method's out-of-sample rule.
struct ReducedSplit {
  Matrix train;
  Matrix test;
};

inline ReducedSplit reduce_split(const SplitDataset& split, const ReducerConfig& reducer,
                                 OutOfSample oos = OutOfSample::Transductive) {
  const DataMatrix& tr = split.train.features;
  const DataMatrix& te = split.test.features;
  if (tr.cols() != te.cols()) throw Error("train and test features differ in dimension");
  try {
    if (oos == OutOfSample::Transductive || reducer.method == Method::Identity) {
      const Embedding e = reduce(vstack(tr, te), reducer);
      return {e.coords.topRows(tr.rows()), e.coords.bottomRows(te.rows())};
    }
    switch (reducer.method) {
      case Method::DiffusionMaps: {
        const Embedding e = embed(tr, reducer.dm());
        return {e.coords, nystrom_extend(e, tr, te).coords};
      }
      case Method::Pca: {
        const Embedding e = embed_pca(tr, reducer.dim);
        return {e.coords, pca_project(e, te)};
      }
      default:
        throw Error("no out-of-sample extension for this method; use transductive mode");
    }
  } catch (const Error& e) {
    throw Error(std::string(method_name(reducer.method)) + " reduction failed: " + e.what());
  }
}

/// Annotates every test row against the training rows and aggregates AP,
/// precision@5 and recall@5 over test images with non-empty ground truth.
inline AnnotationReport annotate_split(const SplitDataset& split, const ReducedSplit& coords, int k) {
  const auto& train_labels = split.train.labels;
  const auto freq = label_frequencies(train_labels, split.train.vocabulary.size());
  AnnotationReport report;
  report.k = k;
  report.n_train = split.train.size();
  report.n_test = split.test.size();
  report.images.resize(split.test.size());
  parallel_for(split.test.size(), [&](std::size_t i) {
    const Annotation a = knn_annotate(coords.train, train_labels, freq,
                                      coords.test.row(static_cast<Eigen::Index>(i)), k);
    ImageResult& r = report.images[i];
    r.id = split.test.ids[i];
    r.ranked = a.ranked;
    r.keywords = a.top(kKeywordsPerImage);
    const auto& truth = split.test.labels[i];
    r.ap = average_precision(a.order(), truth);
    if (r.ap) {
      std::size_t hit = 0;
      for (int l : r.keywords)
        if (std::binary_search(truth.begin(), truth.end(), l)) ++hit;
      r.precision_at_5 = static_cast<double>(hit) / static_cast<double>(r.keywords.size());
      r.recall_at_5 = static_cast<double>(hit) / static_cast<double>(truth.size());
    }
  });
  double ap = 0.0, p5 = 0.0, r5 = 0.0;
  for (const ImageResult& r : report.images) {
    if (!r.ap) {
      ++report.n_skipped;
      continue;
    }
    ++report.n_evaluated;
    ap += *r.ap;
    p5 += r.precision_at_5;
    r5 += r.recall_at_5;
  }
  if (report.n_evaluated > 0) {
    const double n = static_cast<double>(report.n_evaluated);
    report.mean_ap = ap / n;
    report.precision_at_5 = p5 / n;
    report.recall_at_5 = r5 / n;
  }
  return report;
}

inline AnnotationReport evaluate_pipeline(const SplitDataset& split, const ReducerConfig& reducer,
                                          int k, OutOfSample oos = OutOfSample::Transductive,
                                          const std::string& feature = "") {
  AnnotationReport report = annotate_split(split, reduce_split(split, reducer, oos), k);
  report.method = reducer.method;
  report.dim = reducer.method == Method::Identity ? split.train.features.cols() : reducer.dim;
  report.feature = feature;
  return report;
}

}  // namespace diffmap
