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

#ifndef PROVDETECT_EMBED_HPP_
#define PROVDETECT_EMBED_HPP_

#include <openssl/evp.h>

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unistd.h>
#include <vector>

#include "json.hpp"
#include "provdetect/error.hpp"
#include "provdetect/matrix.hpp"
#include "provdetect/rng.hpp"
#include "provdetect/textualize.hpp"

namespace provdetect {

inline constexpr std::size_t kDefaultEmbeddingDim = 768;

using EmbeddingVector = std::vector<double>;

inline EmbeddingVector normalize(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw Error(Errc::kZeroVector, "non-finite entry");
    sq += x * x;
  }
  if (sq == 0.0) throw Error(Errc::kZeroVector, "cannot normalize a zero vector");
  const double norm = std::sqrt(sq);
  EmbeddingVector out(v.begin(), v.end());
  for (double& x : out) x /= norm;
  return out;
}

// Lowercased whitespace-delimited words (a sentence-final period is dropped)
// plus the character 3-grams of each word.
inline std::vector<std::string> hash_tokens(std::string_view text) {
  std::string lower(text);
  for (char& c : lower) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (!lower.empty() && lower.back() == '.') lower.pop_back();
  std::vector<std::string> tokens;
  std::istringstream words(lower);
  std::string w;
  while (words >> w) {
    tokens.push_back("w:" + w);
    for (std::size_t i = 0; i + 3 <= w.size(); ++i) {
      tokens.push_back("g:" + w.substr(i, 3));
    }
  }
  return tokens;
}

// Signed feature hashing. Each token's 64-bit hash picks the bucket
// (hash mod dim) and the sign (top bit).
inline EmbeddingVector hash_embed(std::string_view text,
                                  std::size_t dim = kDefaultEmbeddingDim) {
  if (dim < 2) throw Error(Errc::kInvalidConfig, "hash dim must be >= 2", "dim");
  std::vector<double> acc(dim, 0.0);
  for (const auto& tok : hash_tokens(text)) {
    const std::uint64_t h = mix64(fnv1a64(tok));
    acc[h % dim] += (h >> 63) ? -1.0 : 1.0;
  }
  return normalize(acc);
}

class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string id() const = 0;
  // Model identifier recorded in reports; remote backends learn it from the
  // first response.
  virtual std::string model() const { return id(); }
  virtual std::size_t dim() const = 0;
  virtual std::vector<EmbeddingVector> embed(
      const std::vector<std::string>& texts) = 0;
};

class HashBackend final : public EmbeddingBackend {
 public:
  explicit HashBackend(std::size_t dim = kDefaultEmbeddingDim) : dim_(dim) {
    if (dim < 2) throw Error(Errc::kInvalidConfig, "hash dim must be >= 2", "dim");
  }

  std::string id() const override {
    return "hash-v1-" + std::to_string(dim_);
  }
  std::size_t dim() const override { return dim_; }

  std::vector<EmbeddingVector> embed(
      const std::vector<std::string>& texts) override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(hash_embed(t, dim_));
    return out;
  }

 private:
  std::size_t dim_;
};

struct EmbeddingManifest {
  std::string backend_id;
  std::string model;
  std::size_t dim = 0;
  std::size_t count = 0;
  std::string corpus_digest;

  friend bool operator==(const EmbeddingManifest&,
                         const EmbeddingManifest&) = default;
};

// Row i embeds corpus document i. Entries are float32-representable so the
// on-disk form round-trips exactly.
struct EmbeddingMatrix {
  Matrix rows;
  EmbeddingManifest manifest;
};

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::kIoError, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

namespace detail {

inline void append_u64_le(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf += static_cast<char>((v >> (8 * i)) & 0xff);
}

inline void append_f32_le(std::string& buf, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) buf += static_cast<char>((bits >> (8 * i)) & 0xff);
}

inline float read_f32_le(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return std::bit_cast<float>(bits);
}

inline void append_f64_le(std::string& buf, double d) {
  append_u64_le(buf, std::bit_cast<std::uint64_t>(d));
}

inline double read_f64_le(const char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Write to a sibling temp file, then rename over the target.
inline void write_file_atomic(const std::filesystem::path& path,
                              std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp." +
                                         std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::kIoError, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// Splits "MAGIC\n{json}\n<payload>" into header and payload.
inline std::pair<nlohmann::json, std::string_view> split_container(
    std::string_view bytes, std::string_view magic, Errc corrupt) {
  if (bytes.size() < magic.size() + 1 || bytes.substr(0, magic.size()) != magic ||
      bytes[magic.size()] != '\n') {
    throw Error(corrupt, "bad magic, expected " + std::string(magic));
  }
  const std::size_t start = magic.size() + 1;
  const std::size_t eol = bytes.find('\n', start);
  if (eol == std::string_view::npos) throw Error(corrupt, "missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(start, eol - start));
  } catch (const nlohmann::json::exception& e) {
    throw Error(corrupt, std::string("bad header: ") + e.what());
  }
  return {std::move(header), bytes.substr(eol + 1)};
}

}  // namespace detail

// Digest over (u64le length, bytes) for each document text, in order.
inline std::string corpus_digest(const std::vector<SentenceDoc>& corpus) {
  std::string buf;
  for (const auto& d : corpus) {
    detail::append_u64_le(buf, d.text.size());
    buf += d.text;
  }
  return sha256_hex(buf);
}

// File format: "EMB1\n", one JSON manifest line, then count*dim little-endian
// float32 values in row-major order. The manifest carries a sha256 of the
// payload bytes.
inline std::string serialize_embeddings(const EmbeddingMatrix& m) {
  std::string payload;
  payload.reserve(static_cast<std::size_t>(m.rows.size()) * 4);
  for (Eigen::Index i = 0; i < m.rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.rows.cols(); ++j) {
      detail::append_f32_le(payload, static_cast<float>(m.rows(i, j)));
    }
  }
  nlohmann::ordered_json header;
  header["backend_id"] = m.manifest.backend_id;
  header["model"] = m.manifest.model;
  header["dim"] = m.manifest.dim;
  header["count"] = m.manifest.count;
  header["corpus_digest"] = m.manifest.corpus_digest;
  header["payload_digest"] = sha256_hex(payload);
  return "EMB1\n" + header.dump() + "\n" + payload;
}

inline EmbeddingMatrix deserialize_embeddings(std::string_view bytes) {
  auto [header, payload] =
      detail::split_container(bytes, "EMB1", Errc::kCacheCorrupt);
  EmbeddingMatrix m;
  try {
    m.manifest.backend_id = header.at("backend_id").get<std::string>();
    m.manifest.model = header.at("model").get<std::string>();
    m.manifest.dim = header.at("dim").get<std::size_t>();
    m.manifest.count = header.at("count").get<std::size_t>();
    m.manifest.corpus_digest = header.at("corpus_digest").get<std::string>();
    if (payload.size() != m.manifest.count * m.manifest.dim * 4) {
      throw Error(Errc::kCacheCorrupt, "payload size does not match manifest");
    }
    if (sha256_hex(payload) != header.at("payload_digest").get<std::string>()) {
      throw Error(Errc::kCacheCorrupt, "payload digest mismatch");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kCacheCorrupt, e.what());
  }
  m.rows.resize(static_cast<Eigen::Index>(m.manifest.count),
                static_cast<Eigen::Index>(m.manifest.dim));
  const char* p = payload.data();
  for (Eigen::Index i = 0; i < m.rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.rows.cols(); ++j, p += 4) {
      m.rows(i, j) = detail::read_f32_le(p);
    }
  }
  return m;
}

inline void save_embeddings(const EmbeddingMatrix& m,
                            const std::filesystem::path& path) {
  detail::write_file_atomic(path, serialize_embeddings(m));
}

inline EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
  return deserialize_embeddings(detail::read_file(path));
}

// Embeds every document and L2-normalizes the rows. With a cache path, a
// cache file whose (backend_id, corpus_digest, dim) match is returned without
// calling the backend; otherwise the fresh result replaces it.
inline EmbeddingMatrix embed_corpus(
    const std::vector<SentenceDoc>& corpus, EmbeddingBackend& backend,
    const std::optional<std::filesystem::path>& cache_path = std::nullopt) {
  if (corpus.empty()) throw Error(Errc::kInvalidConfig, "empty corpus");
  const std::string digest = corpus_digest(corpus);
  if (cache_path && std::filesystem::exists(*cache_path)) {
    EmbeddingMatrix cached = load_embeddings(*cache_path);
    if (cached.manifest.backend_id == backend.id() &&
        cached.manifest.corpus_digest == digest &&
        cached.manifest.dim == backend.dim() &&
        cached.manifest.count == corpus.size()) {
      return cached;
    }
  }
  std::vector<std::string> texts;
  texts.reserve(corpus.size());
  for (const auto& d : corpus) texts.push_back(d.text);
  const std::vector<EmbeddingVector> vectors = backend.embed(texts);
  if (vectors.size() != corpus.size()) {
    throw Error(Errc::kDimensionMismatch,
                "backend returned " + std::to_string(vectors.size()) +
                    " vectors for " + std::to_string(corpus.size()) + " texts");
  }
  EmbeddingMatrix m;
  m.rows.resize(static_cast<Eigen::Index>(corpus.size()),
                static_cast<Eigen::Index>(backend.dim()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != backend.dim()) {
      throw Error(Errc::kDimensionMismatch,
                  "expected dim " + std::to_string(backend.dim()) + ", got " +
                      std::to_string(vectors[i].size()));
    }
    const EmbeddingVector unit = normalize(vectors[i]);
    for (std::size_t j = 0; j < unit.size(); ++j) {
      m.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          static_cast<float>(unit[j]);
    }
  }
  m.manifest = {backend.id(), backend.model(), backend.dim(), corpus.size(),
                digest};
  if (cache_path) save_embeddings(m, *cache_path);
  return m;
}

}  // namespace provdetect

#endif  // PROVDETECT_EMBED_HPP_
