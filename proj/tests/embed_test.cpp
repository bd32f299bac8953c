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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "provdetect/embed.hpp"
#include "provdetect/rng.hpp"
#include "provdetect/synth.hpp"
#include "temp_dir.hpp"

namespace provdetect {
namespace {

double norm(const EmbeddingVector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s / (norm(a) * norm(b));
}

using provdetect::testing::TempDir;

class CountingBackend final : public EmbeddingBackend {
 public:
  explicit CountingBackend(std::size_t dim) : inner_(dim) {}
  std::string id() const override { return inner_.id(); }
  std::size_t dim() const override { return inner_.dim(); }
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
    ++calls;
    return inner_.embed(texts);
  }
  int calls = 0;

 private:
  HashBackend inner_;
};

class WrongDimBackend final : public EmbeddingBackend {
 public:
  std::string id() const override { return "wrong"; }
  std::size_t dim() const override { return 8; }
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override {
    return std::vector<EmbeddingVector>(texts.size(), EmbeddingVector(7, 1.0));
  }
};

std::vector<SentenceDoc> corpus(std::int64_t n, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n_processes = n;
  cfg.contamination = 0.05;
  cfg.seed = seed;
  return render_corpus(generate_dataset(cfg), ContextView::kPA);
}

TEST(Normalize, ThreeFourFive) {
  const auto v = normalize(std::vector<double>{3.0, 4.0});
  EXPECT_DOUBLE_EQ(v[0], 0.6);
  EXPECT_DOUBLE_EQ(v[1], 0.8);
  EXPECT_EQ(normalize(std::vector<double>{0.0, 1.0, 0.0}), (EmbeddingVector{0.0, 1.0, 0.0}));
}

TEST(Normalize, RandomVectorsHaveUnitNorm) {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> v(768);
    for (double& x : v) x = rng.normal() * 10.0;
    EXPECT_NEAR(norm(normalize(v)), 1.0, 1e-9);
  }
}

TEST(Normalize, ZeroVectorFails) {
  try {
    normalize(std::vector<double>(5, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kZeroVector);
  }
}

TEST(HashTokens, WordsAndTrigrams) {
  EXPECT_EQ(hash_tokens("Ab cdE."),
            (std::vector<std::string>{"w:ab", "w:cde", "g:cde"}));
}

TEST(HashEmbed, DeterministicUnitNorm) {
  const std::string s = "Process 1054 started /bin/bash and changed /etc/passwd.";
  const auto a = hash_embed(s);
  EXPECT_EQ(a.size(), 768u);
  EXPECT_EQ(a, hash_embed(s));
  EXPECT_NEAR(norm(a), 1.0, 1e-6);
  EXPECT_THROW(hash_embed(""), Error);
  EXPECT_THROW(hash_embed("x", 1), Error);
}

// Independent oracle: rebuild the signed bucket counts from the token list.
TEST(HashEmbed, MatchesBucketCountOracle) {
  const std::string s = "Process 3 connected socket 10.0.0.9:4444.";
  const std::size_t dim = 64;
  std::map<std::size_t, double> buckets;
  for (const auto& tok : hash_tokens(s)) {
    std::uint64_t st = fnv1a64(tok);
    const std::uint64_t h = splitmix64_next(st);
    buckets[h % dim] += (h & (1ULL << 63)) ? -1.0 : 1.0;
  }
  double sq = 0.0;
  for (const auto& [k, v] : buckets) sq += v * v;
  const auto e = hash_embed(s, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double expect = buckets.contains(i) ? buckets[i] / std::sqrt(sq) : 0.0;
    EXPECT_NEAR(e[i], expect, 1e-15) << i;
  }
}

TEST(HashEmbed, SharedTokensPredictSimilarity) {
  const auto a = hash_embed("Process 1 started /bin/bash.");
  const auto b = hash_embed("Process 2 started /bin/bash.");
  const auto c = hash_embed("Process 3 connected socket 10.0.0.9:4444.");
  EXPECT_GT(cosine(a, b), cosine(a, c));
}

TEST(EmbedCorpus, SingleDocument) {
  HashBackend backend;
  const std::vector<SentenceDoc> docs = {{0, ContextView::kPA, "Process 1 started /bin/sh."}};
  const auto m = embed_corpus(docs, backend);
  ASSERT_EQ(m.rows.rows(), 1);
  ASSERT_EQ(m.rows.cols(), 768);
  EXPECT_NEAR(m.rows.row(0).norm(), 1.0, 1e-6);
  EXPECT_EQ(m.manifest.backend_id, "hash-v1-768");
  EXPECT_EQ(m.manifest.count, 1u);
  EXPECT_EQ(m.manifest.dim, 768u);
  EXPECT_EQ(m.manifest.corpus_digest, corpus_digest(docs));
}

TEST(EmbedCorpus, RowsAreUnitAndMatchDocuments) {
  HashBackend backend(128);
  const auto docs = corpus(200, 5);
  const auto m = embed_corpus(docs, backend);
  for (Eigen::Index i = 0; i < m.rows.rows(); ++i) {
    EXPECT_NEAR(m.rows.row(i).norm(), 1.0, 1e-6);
    const auto e = hash_embed(docs[static_cast<std::size_t>(i)].text, 128);
    for (Eigen::Index j = 0; j < 128; ++j) {
      EXPECT_EQ(m.rows(i, j), static_cast<double>(static_cast<float>(e[j])));
    }
  }
  EXPECT_THROW(embed_corpus({}, backend), Error);
}

TEST(EmbedCorpus, WarmCacheSkipsBackend) {
  TempDir tmp;
  const auto cache = tmp.path() / "c.emb";
  CountingBackend backend(96);
  const auto docs = corpus(150, 6);
  const auto first = embed_corpus(docs, backend, cache);
  EXPECT_EQ(backend.calls, 1);
  ASSERT_TRUE(std::filesystem::exists(cache));
  const auto second = embed_corpus(docs, backend, cache);
  EXPECT_EQ(backend.calls, 1);
  EXPECT_EQ(first.rows, second.rows);
  EXPECT_EQ(first.manifest, second.manifest);

  auto changed = docs;
  changed[3].text += " ";
  embed_corpus(changed, backend, cache);
  EXPECT_EQ(backend.calls, 2);
}

TEST(EmbedCorpus, WrongDimensionIsRejected) {
  WrongDimBackend backend;
  try {
    embed_corpus(corpus(3, 1), backend);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kDimensionMismatch);
  }
}

TEST(EmbeddingFile, RoundTripIsBitExact) {
  TempDir tmp;
  HashBackend backend(64);
  const auto m = embed_corpus(corpus(80, 2), backend);
  save_embeddings(m, tmp.path() / "m.emb");
  const auto back = load_embeddings(tmp.path() / "m.emb");
  EXPECT_EQ(back.rows, m.rows);
  EXPECT_EQ(back.manifest, m.manifest);
  const std::string bytes = serialize_embeddings(m);
  EXPECT_EQ(bytes.rfind("EMB1\n", 0), 0u);
  EXPECT_EQ(serialize_embeddings(deserialize_embeddings(bytes)), bytes);
}

Errc load_error(std::string bytes) {
  try {
    deserialize_embeddings(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::kIoError;
}

TEST(EmbeddingFile, CorruptionIsDetected) {
  HashBackend backend(16);
  const std::string good = serialize_embeddings(embed_corpus(corpus(10, 3), backend));
  std::string flipped = good;
  flipped[flipped.size() - 5] ^= 0x40;
  EXPECT_EQ(load_error(flipped), Errc::kCacheCorrupt);
  EXPECT_EQ(load_error("EMB2" + good.substr(4)), Errc::kCacheCorrupt);
  EXPECT_EQ(load_error(good.substr(0, good.size() - 4)), Errc::kCacheCorrupt);
  EXPECT_EQ(load_error("EMB1\nnot json\n"), Errc::kCacheCorrupt);
}

TEST(EmbeddingFile, CorruptCacheFileFailsLoudly) {
  TempDir tmp;
  const auto cache = tmp.path() / "c.emb";
  {
    std::ofstream out(cache, std::ios::binary);
    out << "garbage";
  }
  HashBackend backend(16);
  EXPECT_THROW(embed_corpus(corpus(5, 1), backend, cache), Error);
}

}  // namespace
}  // namespace provdetect
