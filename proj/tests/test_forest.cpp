// Copyright 2026 The wineqc Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "wineqc/forest.hpp"

using namespace wineqc;

namespace {

struct Problem {
  Matrix x;
  std::vector<int> y;
  std::vector<double> w;
};

Problem random_problem(Rng& rng, std::size_t n, std::size_t d, std::size_t c) {
  Problem p{Matrix(n, d), std::vector<int>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) p.x(i, j) = uniform01(rng);
    // labels loosely tied to the first column so splits are informative
    const double s = p.x(i, 0) + 0.5 * uniform01(rng);
    p.y[i] = static_cast<int>(std::min<double>(static_cast<double>(c) - 1, std::floor(s * c / 1.5)));
    p.w[i] = 0.5 + uniform01(rng);
  }
  return p;
}

// Two well separated blobs on feature 0, noise elsewhere.
Problem blobs(Rng& rng, std::size_t n, std::size_t d) {
  Problem p{Matrix(n, d), std::vector<int>(n), std::vector<double>(n, 1.0)};
  for (std::size_t i = 0; i < n; ++i) {
    p.y[i] = static_cast<int>(i % 2);
    p.x(i, 0) = (p.y[i] == 0 ? -2.0 : 2.0) + 0.3 * (uniform01(rng) - 0.5);
    for (std::size_t j = 1; j < d; ++j) p.x(i, j) = uniform01(rng);
  }
  return p;
}

TreeConfig stump_config(Criterion criterion) {
  TreeConfig config;
  config.max_depth = 1;
  config.max_features = {MaxFeatures::Kind::kAll, 1.0};
  config.criterion = criterion;
  return config;
}

}  // namespace

TEST(Cart, OneDimensionalMidpoint) {
  Matrix x(4, 1);
  for (std::size_t i = 0; i < 4; ++i) x(i, 0) = static_cast<double>(i);
  const std::vector<int> y{0, 0, 1, 1};
  const std::vector<double> w(4, 1.0);
  const DecisionTree tree = fit_cart(x, y, w, 2, TreeConfig{});
  ASSERT_EQ(tree.nodes.size(), 3u);
  EXPECT_EQ(tree.nodes[0].feature, 0);
  EXPECT_DOUBLE_EQ(tree.nodes[0].threshold, 1.5);
  EXPECT_EQ(tree.nodes[1].posterior, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(tree.nodes[2].posterior, (std::vector<double>{0.0, 1.0}));
}

TEST(Cart, PureLabelsGiveSingleLeaf) {
  Matrix x(3, 2, 1.0);
  x(1, 0) = 2.0;
  const std::vector<int> y{1, 1, 1};
  const DecisionTree tree = fit_cart(x, y, std::vector<double>(3, 1.0), 2, TreeConfig{});
  ASSERT_EQ(tree.nodes.size(), 1u);
  EXPECT_EQ(tree.nodes[0].posterior, (std::vector<double>{0.0, 1.0}));
}

TEST(Cart, GiniOfBalancedPair) {
  EXPECT_DOUBLE_EQ(impurity(std::vector<double>{2.0, 2.0}, Criterion::kGini), 0.5);
  EXPECT_DOUBLE_EQ(impurity(std::vector<double>{2.0, 2.0}, Criterion::kEntropy), 1.0);
}

TEST(CartOracle, RootSplitMatchesExhaustiveScan) {
  Rng rng(77);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 10 + uniform_index(rng, 191);
    const std::size_t d = 1 + uniform_index(rng, 5);
    const std::size_t c = 2 + uniform_index(rng, 3);
    const Problem p = random_problem(rng, n, d, c);
    for (Criterion crit : {Criterion::kGini, Criterion::kEntropy}) {
      TreeConfig config = stump_config(crit);
      config.seed = static_cast<std::uint64_t>(t);
      const DecisionTree tree = fit_cart(p.x, p.y, p.w, c, config);
      const oracle::CartSplit best =
          oracle::exhaustive_cart_split(p.x, p.y, p.w, c, crit == Criterion::kEntropy);
      EXPECT_TRUE(oracle::cart_root_is_optimal(p.x, p.y, p.w, c, crit == Criterion::kEntropy, best,
                                               tree.nodes[0].is_leaf(), tree.nodes[0].feature,
                                               tree.nodes[0].threshold))
          << "trial " << t;
    }
  }
}

TEST(CartProperty, PosteriorsSumToOne) {
  Rng rng(3);
  const Problem p = random_problem(rng, 150, 4, 3);
  const DecisionTree tree = fit_cart(p.x, p.y, p.w, 3, TreeConfig{});
  for (const TreeNode& node : tree.nodes) {
    if (!node.is_leaf()) {
      EXPECT_TRUE(std::isfinite(node.threshold));
      continue;
    }
    EXPECT_NEAR(std::accumulate(node.posterior.begin(), node.posterior.end(), 0.0), 1.0, 1e-9);
  }
}

TEST(CartProperty, DoublingWeightsKeepsStructure) {
  Rng rng(4);
  const Problem p = random_problem(rng, 120, 3, 3);
  std::vector<double> w2 = p.w;
  for (double& v : w2) v *= 2.0;
  TreeConfig config;
  config.max_depth = 6;
  const DecisionTree a = fit_cart(p.x, p.y, p.w, 3, config);
  const DecisionTree b = fit_cart(p.x, p.y, w2, 3, config);
  ASSERT_EQ(a.nodes.size(), b.nodes.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    EXPECT_EQ(a.nodes[i].feature, b.nodes[i].feature);
    EXPECT_EQ(a.nodes[i].threshold, b.nodes[i].threshold);
  }
}

TEST(CartProperty, ClassWeightsMatchBalancedReduction) {
  // 9:1 problem with class weights 1/9 : 1 against the 1:1 reduction that
  // keeps one majority row per cluster of nine identical rows.
  Matrix big(100, 1), small(20, 1);
  std::vector<int> ybig, ysmall;
  std::vector<double> wbig;
  for (int i = 0; i < 10; ++i) {
    const double v = static_cast<double>(i);
    for (int r = 0; r < 9; ++r) {
      big(ybig.size(), 0) = v;
      ybig.push_back(0);
      wbig.push_back(1.0 / 9.0);
    }
    small(ysmall.size(), 0) = v;
    ysmall.push_back(0);
  }
  for (int i = 0; i < 10; ++i) {
    const double v = 5.5 + static_cast<double>(i);
    big(ybig.size(), 0) = v;
    ybig.push_back(1);
    wbig.push_back(1.0);
    small(ysmall.size(), 0) = v;
    ysmall.push_back(1);
  }
  const DecisionTree a = fit_cart(big, ybig, wbig, 2, stump_config(Criterion::kGini));
  const DecisionTree b =
      fit_cart(small, ysmall, std::vector<double>(20, 1.0), 2, stump_config(Criterion::kGini));
  EXPECT_EQ(a.nodes[0].feature, b.nodes[0].feature);
  EXPECT_DOUBLE_EQ(a.nodes[0].threshold, b.nodes[0].threshold);
}

TEST(Forest, SingleTreeNoBootstrapEqualsCart) {
  Rng rng(12);
  const Problem p = random_problem(rng, 80, 3, 2);
  ForestConfig config;
  config.num_trees = 1;
  config.bootstrap = false;
  config.tree.max_features = {MaxFeatures::Kind::kAll, 1.0};
  config.seed = 9;
  const ForestModel forest = fit_random_forest(p.x, p.y, p.w, config);
  const Matrix proba = forest.predict_proba(p.x);
  const DecisionTree& tree = forest.trees.front();
  for (std::size_t i = 0; i < p.x.rows(); ++i) {
    const auto& post = tree.posterior(p.x.row(i));
    for (std::size_t k = 0; k < 2; ++k) EXPECT_DOUBLE_EQ(proba(i, k), post[k]);
  }
  const DecisionTree direct = fit_cart(p.x, p.y, p.w, 2, [&] {
    TreeConfig c = config.tree;
    c.seed = derive_seed(config.seed, 0, 1);
    return c;
  }());
  EXPECT_EQ(direct, tree);
}

TEST(Forest, SeedDeterminism) {
  Rng rng(13);
  const Problem p = random_problem(rng, 100, 4, 3);
  ForestConfig config;
  config.num_trees = 12;
  config.seed = 4;
  const ForestModel a = fit_random_forest(p.x, p.y, p.w, config);
  const ForestModel b = fit_random_forest(p.x, p.y, p.w, config);
  EXPECT_EQ(a.trees, b.trees);
  config.policy = ExecPolicy::kSerial;
  const ForestModel c = fit_random_forest(p.x, p.y, p.w, config);
  EXPECT_EQ(a.trees, c.trees);
}

TEST(Forest, ProbaIsMeanOfTreePosteriors) {
  Rng rng(14);
  const Problem p = random_problem(rng, 60, 3, 3);
  ForestConfig config;
  config.num_trees = 7;
  const ForestModel forest = fit_random_forest(p.x, p.y, p.w, config);
  const Matrix proba = forest.predict_proba(p.x.select_rows(std::vector<std::size_t>{0, 1, 2, 3, 4,
                                                                                     5, 6, 7, 8, 9}));
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t k = 0; k < forest.class_vocab.size(); ++k) {
      double s = 0.0;
      for (const DecisionTree& t : forest.trees) s += t.posterior(p.x.row(i))[k];
      EXPECT_NEAR(proba(i, k), s / 7.0, 1e-12);
    }
  }
}

TEST(Forest, OobOnSeparableBlobs) {
  Rng rng(15);
  const Problem p = blobs(rng, 200, 4);
  ForestConfig config;
  config.num_trees = 30;
  const ForestModel forest = fit_random_forest(p.x, p.y, p.w, config);
  const OobEstimate oob = oob_error(forest, p.x, p.y);
  EXPECT_LT(oob.error, 0.2);
  EXPECT_EQ(oob.scored + oob.skipped, p.x.rows());
}

TEST(Forest, OobTracksHoldoutError) {
  Rng rng(16);
  Problem all = random_problem(rng, 1000, 4, 2);
  std::vector<std::size_t> tr(500), te(500);
  std::iota(tr.begin(), tr.end(), 0);
  std::iota(te.begin(), te.end(), 500);
  std::vector<int> ytr(all.y.begin(), all.y.begin() + 500), yte(all.y.begin() + 500, all.y.end());
  ForestConfig config;
  config.num_trees = 60;
  const ForestModel forest =
      fit_random_forest(all.x.select_rows(tr), ytr, std::vector<double>(500, 1.0), config);
  const Matrix proba = forest.predict_proba(all.x.select_rows(te));
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < 500; ++i) {
    const int pred = proba(i, 0) >= proba(i, 1) ? forest.class_vocab[0] : forest.class_vocab[1];
    wrong += pred != yte[i];
  }
  const double holdout = static_cast<double>(wrong) / 500.0;
  EXPECT_NEAR(oob_error(forest, all.x.select_rows(tr), ytr).error, holdout, 0.1);
}

TEST(Forest, MdiSingleInformativeFeature) {
  Rng rng(17);
  const Problem p = blobs(rng, 300, 5);
  ForestConfig config;
  config.num_trees = 40;
  config.tree.max_features = {MaxFeatures::Kind::kAll, 1.0};
  const ForestModel forest = fit_random_forest(p.x, p.y, p.w, config);
  const std::vector<double> imp = mdi_importance(forest);
  EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-9);
  EXPECT_GE(imp[0], 0.99);
}

TEST(Forest, SubspaceSizeDefaultsToSqrt) {
  EXPECT_EQ(MaxFeatures{}.resolve(11), 3u);
  EXPECT_EQ((MaxFeatures{MaxFeatures::Kind::kFraction, 0.5}).resolve(11), 5u);
}

TEST(ForestBound, PublishedExamples) {
  EXPECT_EQ(rf_error_bound(0.5, 0.0, 10), 0.05);
  EXPECT_DOUBLE_EQ(rf_error_bound(0.3, 1.0, 7), 0.3);
  double prev = rf_error_bound(0.4, 0.25, 1);
  for (std::size_t t = 2; t < 50; ++t) {
    const double b = rf_error_bound(0.4, 0.25, t);
    EXPECT_LE(b, prev);
    prev = b;
  }
}

TEST(ForestBound, DiagnosticsInRange) {
  Rng rng(18);
  const Problem p = random_problem(rng, 200, 3, 2);
  ForestConfig config;
  config.num_trees = 20;
  const ForestModel forest = fit_random_forest(p.x, p.y, p.w, config);
  const ForestDiagnostics diag = forest_diagnostics(forest, p.x, p.y);
  EXPECT_GE(diag.tree_error, 0.0);
  EXPECT_LE(diag.tree_error, 1.0);
  EXPECT_GE(diag.correlation, -1.0);
  EXPECT_LE(diag.correlation, 1.0);
  EXPECT_DOUBLE_EQ(diag.bound, rf_error_bound(diag.tree_error, diag.correlation, 20));
}
