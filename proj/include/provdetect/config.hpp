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

#ifndef PROVDETECT_CONFIG_HPP_
#define PROVDETECT_CONFIG_HPP_

// Experiment configuration. One JSON document; absent keys keep the defaults
// below. Command-line flags override file values.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "provdetect/autoencoder.hpp"
#include "provdetect/error.hpp"
#include "provdetect/metrics.hpp"
#include "provdetect/record.hpp"
#include "provdetect/synth.hpp"

namespace provdetect {

struct DatasetConfig {
  std::string id = "synthetic";
  std::optional<std::filesystem::path> input;  // JSONL; otherwise synthesized
  SynthConfig synth;
};

enum class BackendKind { kHash, kRemote };

struct EmbedConfig {
  BackendKind backend = BackendKind::kHash;
  std::string url;
  std::size_t dim = kDefaultEmbeddingDim;
  std::optional<std::filesystem::path> cache_dir;
};

struct BaselineConfig {
  std::vector<std::string> detectors = {"IForest", "OC-SVM", "PCA"};
  int n_trees = 100;
  double nu = 0.01;
  double ocsvm_tolerance = 1e-4;
  double pca_variance = 0.95;
  // Seeded subsample of the benign training rows for the baselines; 0 = all.
  std::size_t max_train = 0;
};

struct TsneSettings {
  bool enabled = true;
  double perplexity = 30.0;
  int iterations = 500;
  std::size_t max_points = 400;
};

struct PipelineConfig {
  std::uint64_t seed = 0;
  std::vector<DatasetConfig> datasets = {DatasetConfig{}};
  std::vector<ContextView> views = {kAllViews.begin(), kAllViews.end()};
  double val_fraction = 0.15;
  double test_fraction = 0.25;
  EmbedConfig embed;
  std::vector<int> widths = {768, 512, 128, 512, 768};
  TrainConfig train;
  ThresholdRule threshold;
  BaselineConfig baselines;
  TsneSettings tsne;
  std::filesystem::path report_dir = "report";
};

namespace config_detail {

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

inline ContextView view_from(const std::string& s) {
  auto v = parse_view(s);
  if (!v) throw Error(Errc::kInvalidConfig, "unknown view '" + s + "'", "views");
  return *v;
}

}  // namespace config_detail

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j,
                                                const std::filesystem::path& base_dir = {}) {
  using config_detail::maybe;
  PipelineConfig c;
  try {
    maybe(j, "seed", c.seed);
    if (auto it = j.find("datasets"); it != j.end()) {
      c.datasets.clear();
      for (const auto& dj : *it) {
        DatasetConfig d;
        maybe(dj, "id", d.id);
        if (auto in = dj.find("input"); in != dj.end() && !in->is_null()) {
          std::filesystem::path p = in->get<std::string>();
          d.input = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
        }
        if (dj.contains("synth")) d.synth = synth_config_from_json(dj.at("synth"));
        c.datasets.push_back(std::move(d));
      }
    }
    if (auto it = j.find("views"); it != j.end()) {
      c.views.clear();
      for (const auto& v : *it) c.views.push_back(config_detail::view_from(v.get<std::string>()));
    }
    if (auto it = j.find("split"); it != j.end()) {
      maybe(*it, "val_fraction", c.val_fraction);
      maybe(*it, "test_fraction", c.test_fraction);
    }
    if (auto it = j.find("embed"); it != j.end()) {
      std::string backend = "hash";
      maybe(*it, "backend", backend);
      if (backend == "hash") {
        c.embed.backend = BackendKind::kHash;
      } else if (backend == "remote") {
        c.embed.backend = BackendKind::kRemote;
      } else {
        throw Error(Errc::kInvalidConfig, "backend must be hash or remote", "backend");
      }
      maybe(*it, "url", c.embed.url);
      maybe(*it, "dim", c.embed.dim);
      if (auto cd = it->find("cache_dir"); cd != it->end() && !cd->is_null()) {
        std::filesystem::path p = cd->get<std::string>();
        c.embed.cache_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
      }
    }
    if (auto it = j.find("autoencoder"); it != j.end()) {
      maybe(*it, "widths", c.widths);
      maybe(*it, "epochs", c.train.epochs);
      maybe(*it, "batch_size", c.train.batch_size);
      maybe(*it, "learning_rate", c.train.adam.learning_rate);
      maybe(*it, "validation_fraction", c.train.validation_fraction);
    }
    if (auto it = j.find("threshold"); it != j.end()) {
      std::string strategy = "benign_quantile";
      maybe(*it, "strategy", strategy);
      if (strategy == "benign_quantile") {
        c.threshold.strategy = ThresholdStrategy::kBenignQuantile;
      } else if (strategy == "youden") {
        c.threshold.strategy = ThresholdStrategy::kYouden;
      } else {
        throw Error(Errc::kInvalidConfig, "unknown threshold strategy", "strategy");
      }
      maybe(*it, "q", c.threshold.q);
    }
    if (auto it = j.find("baselines"); it != j.end()) {
      maybe(*it, "detectors", c.baselines.detectors);
      maybe(*it, "n_trees", c.baselines.n_trees);
      maybe(*it, "nu", c.baselines.nu);
      maybe(*it, "ocsvm_tolerance", c.baselines.ocsvm_tolerance);
      maybe(*it, "pca_variance", c.baselines.pca_variance);
      maybe(*it, "max_train", c.baselines.max_train);
    }
    if (auto it = j.find("tsne"); it != j.end()) {
      maybe(*it, "enabled", c.tsne.enabled);
      maybe(*it, "perplexity", c.tsne.perplexity);
      maybe(*it, "iterations", c.tsne.iterations);
      maybe(*it, "max_points", c.tsne.max_points);
    }
    if (auto it = j.find("report_dir"); it != j.end() && !it->is_null()) {
      std::filesystem::path p = it->get<std::string>();
      c.report_dir = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidConfig, e.what());
  }
  for (const auto& d : c.baselines.detectors) {
    if (d != "IForest" && d != "OC-SVM" && d != "PCA") {
      throw Error(Errc::kInvalidConfig, "unknown baseline '" + d + "'", "detectors");
    }
  }
  if (c.datasets.empty()) throw Error(Errc::kInvalidConfig, "no datasets", "datasets");
  if (c.views.empty()) throw Error(Errc::kInvalidConfig, "no views", "views");
  c.train.validate();
  return c;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidConfig, path.string() + ": " + e.what());
  }
}

// Relative paths inside a config file resolve against the current directory.
inline PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  return pipeline_config_from_json(read_json_file(path));
}

// Per-stage seeds: derive_seed(master, "<stage>/<dataset>[/<view>]").
inline std::uint64_t stage_seed(std::uint64_t master, const std::string& stage,
                                const std::string& dataset, std::optional<ContextView> view = {}) {
  std::string key = stage + "/" + dataset;
  if (view) key += "/" + std::string(to_string(*view));
  return derive_seed(master, key);
}

// The synthesizer config of a dataset with its seed derived from the master.
inline SynthConfig seeded_synth(const PipelineConfig& c, const DatasetConfig& d) {
  SynthConfig s = d.synth;
  s.seed = stage_seed(c.seed, "synth", d.id);
  return s;
}

}  // namespace provdetect

#endif  // PROVDETECT_CONFIG_HPP_
