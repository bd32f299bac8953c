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

#ifndef PROVDETECT_REMOTE_BACKEND_HPP_
#define PROVDETECT_REMOTE_BACKEND_HPP_

// Client for the embedding sidecar:
//   POST /v1/embed  {"texts":[...],"normalize":true}
//                -> {"model":"...","dim":768,"vectors":[[...],...]}
//   GET  /healthz   -> 200 {"status":"ok",...}
// The sidecar rejects batches above 256 texts with 413, so requests are
// chunked client-side.

#include <mutex>
#include <string>
#include <vector>

// Eigen (via embed.hpp) must precede httplib: <resolv.h> defines `_res`.
#include "provdetect/embed.hpp"
#include "provdetect/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace provdetect {

inline constexpr std::size_t kRemoteBatchLimit = 256;

struct EmbedResponse {
  std::string model;
  std::size_t dim = 0;
  std::vector<EmbeddingVector> vectors;
};

inline std::string make_embed_request(const std::vector<std::string>& texts,
                                      bool normalize_vectors = true) {
  nlohmann::ordered_json j;
  j["texts"] = texts;
  j["normalize"] = normalize_vectors;
  return j.dump();
}

inline EmbedResponse parse_embed_response(std::string_view body,
                                          std::size_t expected_count,
                                          std::size_t expected_dim) {
  EmbedResponse r;
  try {
    const auto j = nlohmann::json::parse(body);
    r.model = j.at("model").get<std::string>();
    r.dim = j.at("dim").get<std::size_t>();
    r.vectors = j.at("vectors").get<std::vector<EmbeddingVector>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kBackendUnavailable,
                std::string("malformed embed response: ") + e.what());
  }
  if (r.dim != expected_dim) {
    throw Error(Errc::kDimensionMismatch,
                "backend dim " + std::to_string(r.dim) + ", expected " +
                    std::to_string(expected_dim));
  }
  if (r.vectors.size() != expected_count) {
    throw Error(Errc::kDimensionMismatch,
                "backend returned " + std::to_string(r.vectors.size()) +
                    " vectors for " + std::to_string(expected_count) + " texts");
  }
  for (const auto& v : r.vectors) {
    if (v.size() != expected_dim) {
      throw Error(Errc::kDimensionMismatch,
                  "vector of length " + std::to_string(v.size()));
    }
  }
  return r;
}

class RemoteBackend final : public EmbeddingBackend {
 public:
  explicit RemoteBackend(std::string url,
                         std::size_t dim = kDefaultEmbeddingDim)
      : url_(std::move(url)), dim_(dim) {}

  std::string id() const override { return "remote:" + url_; }

  std::string model() const override {
    std::lock_guard lock(mu_);
    return model_.empty() ? id() : model_;
  }

  std::size_t dim() const override { return dim_; }

  bool healthy() const {
    httplib::Client client = make_client();
    auto res = client.Get("/healthz");
    return res && res->status == 200;
  }

  std::vector<EmbeddingVector> embed(
      const std::vector<std::string>& texts) override {
    httplib::Client client = make_client();
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += kRemoteBatchLimit) {
      const std::size_t stop = std::min(texts.size(), start + kRemoteBatchLimit);
      const std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                           texts.begin() + static_cast<std::ptrdiff_t>(stop));
      auto res = client.Post("/v1/embed", make_embed_request(batch),
                             "application/json");
      if (!res) {
        throw Error(Errc::kBackendUnavailable,
                    url_ + ": " + httplib::to_string(res.error()));
      }
      if (res->status != 200) {
        throw Error(Errc::kBackendUnavailable,
                    url_ + " answered HTTP " + std::to_string(res->status));
      }
      EmbedResponse parsed = parse_embed_response(res->body, batch.size(), dim_);
      {
        std::lock_guard lock(mu_);
        model_ = parsed.model;
      }
      for (auto& v : parsed.vectors) out.push_back(std::move(v));
    }
    return out;
  }

 private:
  httplib::Client make_client() const {
    httplib::Client client(url_);
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(300, 0);
    return client;
  }

  std::string url_;
  std::size_t dim_;
  mutable std::mutex mu_;
  std::string model_;
};

}  // namespace provdetect

#endif  // PROVDETECT_REMOTE_BACKEND_HPP_
