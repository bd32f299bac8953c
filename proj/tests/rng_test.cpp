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

#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "provdetect/rng.hpp"

namespace provdetect {
namespace {

// Published reference outputs of splitmix64 (seed 1234567) and xoshiro256**
// (state {1,2,3,4}).
TEST(Splitmix64, MatchesReferenceVector) {
  std::uint64_t state = 1234567;
  const std::array<std::uint64_t, 5> expected = {
      6457827717110365317ULL, 3203168211198807973ULL, 9817491932198370423ULL,
      4593380528125082431ULL, 16408922859458223821ULL};
  for (auto e : expected) EXPECT_EQ(splitmix64_next(state), e);
}

TEST(Xoshiro256StarStar, MatchesReferenceVector) {
  Rng rng = Rng::from_state({1, 2, 3, 4});
  const std::array<std::uint64_t, 6> expected = {
      11520ULL, 0ULL, 1509978240ULL, 1215971899390074240ULL, 1216172134540287360ULL,
      607988272756665600ULL};
  for (auto e : expected) EXPECT_EQ(rng.next(), e);
}

TEST(Rng, SeedExpandsThroughSplitmix) {
  std::uint64_t sm = 99;
  std::array<std::uint64_t, 4> state{};
  for (auto& w : state) w = splitmix64_next(sm);
  Rng a(99);
  Rng b = Rng::from_state(state);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Fnv1a64, KnownHashes) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(DeriveSeed, StageNamesSeparateStreams) {
  EXPECT_EQ(derive_seed(7, "split"), derive_seed(7, "split"));
  EXPECT_NE(derive_seed(7, "split"), derive_seed(7, "synth"));
  EXPECT_NE(derive_seed(7, "split"), derive_seed(8, "split"));
  std::uint64_t state = 7 ^ fnv1a64("split");
  EXPECT_EQ(derive_seed(7, "split"), splitmix64_next(state));
  EXPECT_NE(derive_seed(7, std::uint64_t{0}), derive_seed(7, std::uint64_t{1}));
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  Rng rng(3);
  std::map<std::uint64_t, int> counts;
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.below(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  ASSERT_EQ(counts.size(), 7u);
  for (const auto& [v, c] : counts) EXPECT_NEAR(c, 10000, 500) << v;
  EXPECT_EQ(rng.below(1), 0u);
  EXPECT_EQ(rng.below(0), 0u);
}

TEST(Rng, BetweenIsInclusive) {
  Rng rng(4);
  bool saw_lo = false;
  bool saw_hi = false;
  for (int i = 0; i < 2000; ++i) {
    const auto v = rng.between(-2, 2);
    ASSERT_GE(v, -2);
    ASSERT_LE(v, 2);
    saw_lo |= v == -2;
    saw_hi |= v == 2;
  }
  EXPECT_TRUE(saw_lo && saw_hi);
}

TEST(Rng, UniformAndNormalMoments) {
  Rng rng(5);
  const int n = 200000;
  double su = 0.0;
  double sn = 0.0;
  double sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}

TEST(Rng, ShuffleIsAPermutationAndDeterministic) {
  std::vector<int> a(50);
  std::iota(a.begin(), a.end(), 0);
  std::vector<int> b = a;
  Rng r1(11);
  Rng r2(11);
  r1.shuffle(std::span<int>(a));
  r2.shuffle(std::span<int>(b));
  EXPECT_EQ(a, b);
  std::vector<int> sorted = a;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> ident(50);
  std::iota(ident.begin(), ident.end(), 0);
  EXPECT_EQ(sorted, ident);
  EXPECT_NE(a, ident);
}

}  // namespace
}  // namespace provdetect
