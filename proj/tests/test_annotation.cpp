#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "diffmap/annotation.hpp"

using namespace diffmap;

namespace {

/// n images in `dim` dimensions; image i carries (i % 7) + 1 labels drawn
/// from a vocabulary of `vocab` concepts.
LabeledDataset synthetic_dataset(std::uint64_t seed, std::size_t n, Eigen::Index dim, int vocab) {
  Rng rng(seed);
  LabeledDataset d;
  Matrix x(static_cast<Eigen::Index>(n), dim);
  for (std::size_t i = 0; i < n; ++i) {
    d.ids.push_back("img" + std::to_string(i));
    for (Eigen::Index c = 0; c < dim; ++c) x(static_cast<Eigen::Index>(i), c) = rng.normal();
    std::vector<int> ls;
    for (std::size_t j = 0; j <= i % 7; ++j) ls.push_back(static_cast<int>(rng.index(vocab)));
    d.labels.push_back(canonical_labels(ls));
  }
  d.features = DataMatrix(std::move(x));
  for (int v = 0; v < vocab; ++v) d.vocabulary.push_back("w" + std::to_string(v));
  return d;
}

LabeledDataset with_label_counts(const std::vector<int>& counts) {
  LabeledDataset d;
  Matrix x(static_cast<Eigen::Index>(counts.size()), 2);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    d.ids.push_back("i" + std::to_string(i));
    x.row(static_cast<Eigen::Index>(i)) << static_cast<double>(i), 0.0;
    std::vector<int> ls(static_cast<std::size_t>(counts[i]));
    std::iota(ls.begin(), ls.end(), 0);
    d.labels.push_back(ls);
  }
  d.features = DataMatrix(std::move(x));
  d.vocabulary.assign(10, "w");
  return d;
}

}  // namespace

TEST(PruneAndSplit, ZeroThresholdKeepsEverything) {
  const auto s = prune_and_split(with_label_counts({0, 1, 2, 3, 4, 5, 6}), 0, 1);
  EXPECT_EQ(s.train.size() + s.test.size(), 7u);
  EXPECT_EQ(s.train.size(), 4u);
}

TEST(PruneAndSplit, KeepsImagesWithEnoughLabels) {
  const auto s = prune_and_split(with_label_counts({1, 5, 2, 6, 0, 3, 7, 1, 5, 4}), 5, 3);
  EXPECT_EQ(s.train.size(), 2u);
  EXPECT_EQ(s.test.size(), 2u);
  for (const auto* part : {&s.train, &s.test})
    for (const auto& ls : part->labels) EXPECT_GE(ls.size(), 5u);
}

TEST(PruneAndSplit, DeterministicAndDisjoint) {
  const auto data = synthetic_dataset(1, 41, 3, 12);
  const auto a = prune_and_split(data, 0, 77), b = prune_and_split(data, 0, 77);
  EXPECT_EQ(a.train.ids, b.train.ids);
  EXPECT_EQ(a.test.ids, b.test.ids);
  EXPECT_EQ(a.train.size(), 21u);
  std::vector<std::string> all = a.train.ids;
  all.insert(all.end(), a.test.ids.begin(), a.test.ids.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(std::unique(all.begin(), all.end()), all.end());
  EXPECT_EQ(all.size(), 41u);
  const auto c = prune_and_split(data, 0, 78);
  EXPECT_NE(a.train.ids, c.train.ids);
}

TEST(PruneAndSplit, RejectsEverythingPruned) {
  try {
    prune_and_split(with_label_counts({1, 2, 3}), 5, 1);
    FAIL() << "expected rejection";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("leaves 0 of 3"), std::string::npos) << e.what();
  }
}

TEST(KnnAnnotate, SingleNeighborLabelsComeFirst) {
  const auto data = synthetic_dataset(2, 30, 4, 15);
  const Eigen::RowVectorXd q = data.features.row(11) + Eigen::RowVectorXd::Constant(4, 1e-6);
  const auto a = knn_annotate(data, q, 1);
  ASSERT_EQ(a.neighbors.size(), 1u);
  EXPECT_EQ(a.neighbors[0], 11);
  const auto& truth = data.labels[11];
  for (std::size_t r = 0; r < truth.size(); ++r) {
    EXPECT_EQ(a.ranked[r].votes, 1);
    EXPECT_TRUE(std::binary_search(truth.begin(), truth.end(), a.ranked[r].label));
  }
  EXPECT_EQ(a.ranked[truth.size()].votes, 0);
}

TEST(KnnAnnotate, HandPlacedToyRanking) {
  // vocabulary A=0, B=1, C=2, D=3; the three nearest carry {A,B}, {A}, {C}
  LabeledDataset train;
  train.ids = {"p0", "p1", "p2", "p3", "p4", "p5"};
  train.features = DataMatrix::from_rows({{1, 0}, {0, 1}, {-1.5, 0}, {10, 10}, {-10, 10}, {10, -10}});
  train.labels = {{0, 1}, {0}, {2}, {2, 3}, {2, 3}, {3}};
  train.vocabulary = {"A", "B", "C", "D"};
  const auto a = knn_annotate(train, Eigen::RowVector2d(0, 0), 3);
  ASSERT_EQ(a.ranked.size(), 4u);
  EXPECT_EQ(a.ranked[0].label, 0);
  EXPECT_EQ(a.ranked[0].votes, 2);
  // B and C tie at one vote; C is more frequent in training (3 vs 1)
  EXPECT_EQ(a.ranked[1].label, 2);
  EXPECT_EQ(a.ranked[2].label, 1);
  EXPECT_EQ(a.ranked[1].votes, 1);
  EXPECT_EQ(a.ranked[2].votes, 1);
  EXPECT_EQ(a.ranked[3].label, 3);
  EXPECT_EQ(a.ranked[3].votes, 0);
}

TEST(KnnAnnotate, VocabularyIndexBreaksFullTies) {
  LabeledDataset train;
  train.ids = {"a", "b"};
  train.features = DataMatrix::from_rows({{0.0}, {5.0}});
  train.labels = {{2, 0}, {1, 3}};
  train.vocabulary = {"w0", "w1", "w2", "w3"};
  const auto a = knn_annotate(train, Eigen::RowVectorXd::Zero(1), 1);
  EXPECT_EQ(a.order(), (std::vector<int>{0, 2, 1, 3}));
}

TEST(KnnAnnotate, DuplicateQueryRetrievesItself) {
  const auto data = synthetic_dataset(3, 40, 5, 10);
  const auto a = knn_annotate(data, data.features.row(17), 5);
  EXPECT_NE(std::find(a.neighbors.begin(), a.neighbors.end(), 17), a.neighbors.end());
}

TEST(KnnAnnotate, VoteTotalMatchesNeighborLabels) {
  const auto data = synthetic_dataset(4, 50, 3, 20);
  const auto a = knn_annotate(data, Eigen::RowVector3d(0.1, -0.2, 0.3), 8);
  int votes = 0;
  for (const auto& s : a.ranked) votes += s.votes;
  std::size_t carried = 0;
  for (auto nb : a.neighbors) carried += data.labels[static_cast<std::size_t>(nb)].size();
  EXPECT_EQ(static_cast<std::size_t>(votes), carried);
  EXPECT_EQ(a.ranked.size(), 20u);
}

TEST(KnnAnnotate, InvariantToTrainingRowOrder) {
  const auto data = synthetic_dataset(5, 60, 4, 25);
  std::vector<std::size_t> perm(60);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(6);
  rng.shuffle(perm);
  const auto shuffled = data.subset(perm);
  Rng qr(7);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::RowVectorXd q(4);
    for (int c = 0; c < 4; ++c) q(c) = qr.normal();
    EXPECT_EQ(knn_annotate(data, q, 8).order(), knn_annotate(shuffled, q, 8).order());
  }
}

TEST(KnnAnnotate, RejectsBadQueries) {
  const auto data = synthetic_dataset(8, 10, 3, 5);
  EXPECT_THROW(knn_annotate(data, Eigen::RowVectorXd::Zero(2), 3), Error);
  EXPECT_THROW(knn_annotate(data, Eigen::RowVectorXd::Zero(3), 11), Error);
  EXPECT_THROW(knn_annotate(data, Eigen::RowVectorXd::Zero(3), 0), Error);
}

TEST(AveragePrecision, WorkedExamples) {
  EXPECT_DOUBLE_EQ(*average_precision({3, 1, 0, 2}, {1, 3}), 1.0);
  EXPECT_DOUBLE_EQ(*average_precision({0, 2, 1, 3}, {2}), 0.5);
  // truth {a, b}, ranking (x, a, y, b)
  EXPECT_DOUBLE_EQ(*average_precision({9, 1, 8, 2}, {1, 2}), 0.5);
  EXPECT_FALSE(average_precision({0, 1}, {}).has_value());
  EXPECT_THROW(average_precision({0, 1}, {5}), Error);
}

TEST(AveragePrecision, MovingATruthLabelEarlierNeverHurts) {
  Rng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<int> ranking(12);
    std::iota(ranking.begin(), ranking.end(), 0);
    rng.shuffle(ranking);
    std::vector<int> truth;
    for (int l = 0; l < 12; ++l)
      if (rng.uniform() < 0.3) truth.push_back(l);
    if (truth.empty()) truth.push_back(0);
    const double before = *average_precision(ranking, truth);
    for (std::size_t r = 1; r < ranking.size(); ++r) {
      if (!std::count(truth.begin(), truth.end(), ranking[r])) continue;
      auto swapped = ranking;
      std::swap(swapped[r - 1], swapped[r]);
      EXPECT_GE(*average_precision(swapped, truth), before - 1e-15);
    }
  }
}

TEST(AveragePrecision, RandomRankingMatchesAnalyticExpectation) {
  // For |truth| = m out of V labels in uniformly random order,
  // E[AP] = (H_V + (m - 1) (V - H_V) / (V - 1)) / V.
  const int vocab = 40, m = 4, trials = 20000;
  double harmonic = 0.0;
  for (int r = 1; r <= vocab; ++r) harmonic += 1.0 / r;
  const double expected = (harmonic + (m - 1) * (vocab - harmonic) / (vocab - 1)) / vocab;
  Rng rng(10);
  std::vector<int> ranking(vocab);
  std::iota(ranking.begin(), ranking.end(), 0);
  double total = 0.0;
  for (int t = 0; t < trials; ++t) {
    rng.shuffle(ranking);
    total += *average_precision(ranking, {0, 1, 2, 3});
  }
  EXPECT_NEAR(total / trials, expected, 0.005);
}

TEST(Pipeline, DuplicatedImagesGivePerfectAp) {
  auto base = synthetic_dataset(11, 20, 6, 30);
  SplitDataset split;
  split.train = base;
  split.test = base;
  ReducerConfig id;
  id.method = Method::Identity;
  const auto report = evaluate_pipeline(split, id, 1);
  EXPECT_DOUBLE_EQ(report.mean_ap, 1.0);
  EXPECT_EQ(report.n_evaluated, 20u);
  EXPECT_EQ(report.n_skipped, 0u);
  for (const auto& img : report.images) EXPECT_EQ(img.keywords.size(), kKeywordsPerImage);
}

TEST(Pipeline, EmptyTruthIsSkippedAndCounted) {
  auto data = synthetic_dataset(12, 20, 3, 10);
  data.labels[3].clear();
  data.labels[8].clear();
  const auto split = prune_and_split(data, 0, 1);
  ReducerConfig id;
  id.method = Method::Identity;
  const auto report = evaluate_pipeline(split, id, 3);
  std::size_t empty = 0;
  for (const auto& ls : split.test.labels) empty += ls.empty();
  EXPECT_EQ(report.n_skipped, empty);
  EXPECT_EQ(report.n_evaluated + report.n_skipped, split.test.size());
}

TEST(Pipeline, AcceptsTheFullSweep) {
  const auto split = prune_and_split(synthetic_dataset(13, 140, 60, 40), 0, 2);
  for (Method m : {Method::DiffusionMaps, Method::Pca, Method::Lle, Method::Lem})
    for (Eigen::Index d : {10, 20, 30, 40, 50}) {
      ReducerConfig cfg;
      cfg.method = m;
      cfg.dim = d;
      const ReducedSplit coords = reduce_split(split, cfg);
      for (int k : {4, 8, 16, 32}) {
        const auto report = annotate_split(split, coords, k);
        EXPECT_GE(report.mean_ap, 0.0);
        EXPECT_LE(report.mean_ap, 1.0);
        EXPECT_EQ(report.n_test, split.test.size());
      }
    }
}

TEST(Pipeline, TrainingOrderDoesNotChangeTheReport) {
  const auto split = prune_and_split(synthetic_dataset(14, 80, 8, 20), 0, 3);
  std::vector<std::size_t> perm(split.train.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(15);
  rng.shuffle(perm);
  SplitDataset shuffled = split;
  shuffled.train = split.train.subset(perm);
  for (Method m : {Method::Identity, Method::Pca}) {
    ReducerConfig cfg;
    cfg.method = m;
    cfg.dim = 4;
    const auto a = evaluate_pipeline(split, cfg, 8);
    const auto b = evaluate_pipeline(shuffled, cfg, 8);
    EXPECT_NEAR(a.mean_ap, b.mean_ap, 1e-12) << method_name(m);
    EXPECT_NEAR(a.precision_at_5, b.precision_at_5, 1e-12);
    for (std::size_t i = 0; i < a.images.size(); ++i) EXPECT_EQ(a.images[i].keywords, b.images[i].keywords);
  }
}

TEST(Pipeline, NystromModeForDiffusionMapsAndPca) {
  const auto split = prune_and_split(synthetic_dataset(16, 60, 5, 12), 0, 4);
  for (Method m : {Method::DiffusionMaps, Method::Pca}) {
    ReducerConfig cfg;
    cfg.method = m;
    cfg.dim = 3;
    cfg.sigma = 2.0;
    const auto coords = reduce_split(split, cfg, OutOfSample::Nystrom);
    EXPECT_EQ(coords.train.rows(), static_cast<Eigen::Index>(split.train.size()));
    EXPECT_EQ(coords.test.rows(), static_cast<Eigen::Index>(split.test.size()));
    EXPECT_TRUE(coords.test.allFinite());
  }
  ReducerConfig lle;
  lle.method = Method::Lle;
  EXPECT_THROW(reduce_split(split, lle, OutOfSample::Nystrom), Error);
}

TEST(Pipeline, ReducerErrorsNameTheMethod) {
  const auto split = prune_and_split(synthetic_dataset(17, 10, 3, 5), 0, 1);
  ReducerConfig cfg;
  cfg.dim = 30;
  try {
    reduce_split(split, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()).rfind("DM", 0), 0u) << e.what();
  }
}
