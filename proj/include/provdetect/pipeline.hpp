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

#ifndef PROVDETECT_PIPELINE_HPP_
#define PROVDETECT_PIPELINE_HPP_

// End-to-end run: records -> split -> per view {sentences, embeddings,
// autoencoder, baselines} -> report. Every stochastic stage draws its seed
// from stage_seed(master, stage, dataset[, view]).

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "provdetect/autoencoder.hpp"
#include "provdetect/config.hpp"
#include "provdetect/embed.hpp"
#include "provdetect/error.hpp"
#include "provdetect/iforest.hpp"
#include "provdetect/ingest.hpp"
#include "provdetect/matrix.hpp"
#include "provdetect/metrics.hpp"
#include "provdetect/ocsvm.hpp"
#include "provdetect/pca.hpp"
#include "provdetect/remote_backend.hpp"
#include "provdetect/report.hpp"
#include "provdetect/synth.hpp"
#include "provdetect/textualize.hpp"
#include "provdetect/tsne.hpp"

namespace provdetect {

inline const std::string kAutoencoderName = "MPNet-AE";

inline std::unique_ptr<EmbeddingBackend> make_backend(const EmbedConfig& cfg) {
  if (cfg.backend == BackendKind::kHash) return std::make_unique<HashBackend>(cfg.dim);
  if (cfg.url.empty()) {
    throw Error(Errc::kInvalidConfig, "remote backend needs a url", "url");
  }
  return std::make_unique<RemoteBackend>(cfg.url, cfg.dim);
}

inline std::vector<ProcessRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot open " + path.string());
  return parse_jsonl(in);
}

inline std::vector<ProcessRecord> load_dataset(const PipelineConfig& cfg,
                                               const DatasetConfig& d) {
  if (d.input) return read_records(*d.input);
  return generate_dataset(seeded_synth(cfg, d));
}

inline DatasetSplit split_dataset(const PipelineConfig& cfg, const DatasetConfig& d,
                                  const std::vector<ProcessRecord>& records) {
  return split(records, cfg.val_fraction, cfg.test_fraction,
               stage_seed(cfg.seed, "split", d.id));
}

inline std::vector<int> labels_of(const std::vector<ProcessRecord>& records,
                                  std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto i : rows) out.push_back(records[i].label.value_or(0));
  return out;
}

inline std::vector<double> gather(const std::vector<double>& scores,
                                  std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (auto i : rows) out.push_back(scores[i]);
  return out;
}

// Seeded subsample without replacement, returned in ascending order. A limit
// of 0 (or >= size) keeps every row.
inline std::vector<std::size_t> subsample_rows(std::vector<std::size_t> rows, std::size_t limit,
                                               std::uint64_t seed) {
  if (limit == 0 || limit >= rows.size()) return rows;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(rows));
  rows.resize(limit);
  std::sort(rows.begin(), rows.end());
  return rows;
}

inline AEArchitecture architecture_for(const PipelineConfig& cfg) {
  AEArchitecture arch;
  arch.widths = cfg.widths;
  arch.widths.front() = static_cast<int>(cfg.embed.dim);
  arch.widths.back() = static_cast<int>(cfg.embed.dim);
  arch.validate();
  return arch;
}

// Threshold from validation scores; nullopt when the rule cannot be applied
// (no benign validation rows, or youden without anomalies).
inline std::optional<double> fit_threshold(const std::vector<ScoredSample>& validation,
                                           const ThresholdRule& rule) {
  try {
    return select_threshold(validation, rule);
  } catch (const Error& e) {
    if (e.code() == Errc::kSingleClass || e.code() == Errc::kInvalidConfig) return std::nullopt;
    throw;
  }
}

struct DetectorScores {
  std::string detector;
  std::vector<double> scores;  // one per record, empty on failure
  std::optional<std::string> failure;
};

// Fits one baseline on the benign training rows and scores every record.
// Fit errors become a failure string so the remaining cells still render.
inline DetectorScores run_baseline(const std::string& name, const Matrix& embeddings,
                                   std::span<const std::size_t> train_rows,
                                   const BaselineConfig& cfg, std::uint64_t seed) {
  DetectorScores out{name, {}, std::nullopt};
  try {
    const Matrix train = select_rows(embeddings, train_rows);
    if (name == "IForest") {
      out.scores = iforest_score(iforest_fit(train, seed, cfg.n_trees), embeddings);
    } else if (name == "OC-SVM") {
      OCSVMConfig oc;
      oc.nu = cfg.nu;
      oc.tolerance = cfg.ocsvm_tolerance;
      out.scores = ocsvm_score(ocsvm_fit(train, oc), embeddings);
    } else if (name == "PCA") {
      out.scores = pca_score(pca_fit(train, cfg.pca_variance), embeddings);
    } else {
      throw Error(Errc::kInvalidConfig, "unknown baseline '" + name + "'", "detectors");
    }
  } catch (const Error& e) {
    if (e.code() == Errc::kInvalidConfig) throw;
    out.scores.clear();
    out.failure = e.what();
  }
  return out;
}

inline EvalCell make_cell(const std::string& dataset, ContextView view,
                          const DetectorScores& det, const std::vector<ProcessRecord>& records,
                          const DatasetSplit& parts, const ThresholdRule& rule) {
  EvalCell cell;
  cell.dataset = dataset;
  cell.view = std::string(to_string(view));
  cell.detector = det.detector;
  cell.failure = det.failure;
  if (det.failure) return cell;
  cell.samples = make_samples(gather(det.scores, parts.test), labels_of(records, parts.test));
  cell.threshold = fit_threshold(
      make_samples(gather(det.scores, parts.validation), labels_of(records, parts.validation)),
      rule);
  return cell;
}

struct PipelineLog {
  std::function<void(const std::string&)> info = [](const std::string&) {};
};

namespace pipeline_detail {

inline void write_history(const std::filesystem::path& path, const TrainHistory& h) {
  std::string csv = "epoch,train_mse,val_mse\n";
  for (std::size_t e = 0; e < h.train_mse.size(); ++e) {
    csv += std::to_string(e + 1) + "," + format_double(h.train_mse[e]) + "," +
           format_double(h.val_mse[e]) + "\n";
  }
  report_detail::write_text(path, csv);
}

// Test-split reconstruction errors with labels and the fitted threshold.
inline void write_scatter(const std::filesystem::path& path, const EvalCell& cell,
                          std::span<const std::size_t> rows) {
  std::string csv = "record,score,label,threshold\n";
  const std::string thr = cell.threshold ? format_double(*cell.threshold) : "";
  for (std::size_t i = 0; i < cell.samples.size(); ++i) {
    csv += std::to_string(rows[i]) + "," + format_double(cell.samples[i].score) + "," +
           std::to_string(cell.samples[i].label) + "," + thr + "\n";
  }
  report_detail::write_text(path, csv);
}

}  // namespace pipeline_detail

struct PipelineResult {
  std::vector<CellResult> cells;
  std::string embedding_model;
};

// Runs every (dataset, view) cell and writes the report directory:
// heatmap.csv, summary.json, roc/, tsne.csv, history/ and scatter/.
inline PipelineResult run_pipeline(const PipelineConfig& cfg, EmbeddingBackend& backend,
                                   const PipelineLog& log = {}) {
  if (backend.dim() != cfg.embed.dim) {
    throw Error(Errc::kDimensionMismatch, "backend dim differs from embed.dim", "dim");
  }
  const AEArchitecture arch = architecture_for(cfg);
  const auto& dir = cfg.report_dir;
  std::filesystem::create_directories(dir / "history");
  std::filesystem::create_directories(dir / "scatter");

  ReportInputs inputs;
  for (const auto& d : cfg.datasets) {
    const std::vector<ProcessRecord> records = load_dataset(cfg, d);
    const DatasetSplit parts = split_dataset(cfg, d, records);
    for (const auto& w : parts.warnings) log.info(d.id + ": " + w.what());
    log.info(d.id + ": " + std::to_string(records.size()) + " records, train " +
             std::to_string(parts.train.size()) + ", validation " +
             std::to_string(parts.validation.size()) + ", test " +
             std::to_string(parts.test.size()));

    for (const ContextView view : cfg.views) {
      const std::string tag = file_safe(d.id) + "_" + std::string(to_string(view));
      const auto corpus = render_corpus(records, view);
      std::optional<std::filesystem::path> cache;
      if (cfg.embed.cache_dir) {
        std::filesystem::create_directories(*cfg.embed.cache_dir);
        cache = *cfg.embed.cache_dir / (tag + ".emb");
      }
      const EmbeddingMatrix emb = embed_corpus(corpus, backend, cache);
      log.info(tag + ": embedded " + std::to_string(emb.rows.rows()) + " sentences");

      auto model = init_autoencoder<float>(arch, stage_seed(cfg.seed, "ae-init", d.id, view));
      TrainConfig tc = cfg.train;
      tc.seed = stage_seed(cfg.seed, "ae-train", d.id, view);
      const TrainHistory history = fit(model, select_rows(emb.rows, parts.train), tc);
      pipeline_detail::write_history(dir / "history" / (tag + ".csv"), history);
      log.info(tag + ": autoencoder final train MSE " + format_double(history.train_mse.back()));

      const DetectorScores ae{kAutoencoderName, score(model, emb.rows), std::nullopt};
      EvalCell ae_cell = make_cell(d.id, view, ae, records, parts, cfg.threshold);
      pipeline_detail::write_scatter(dir / "scatter" / (tag + ".csv"), ae_cell, parts.test);
      inputs.cells.push_back(std::move(ae_cell));

      const auto baseline_rows =
          subsample_rows(parts.train, cfg.baselines.max_train,
                         stage_seed(cfg.seed, "baseline-rows", d.id, view));
      for (const auto& name : cfg.baselines.detectors) {
        const DetectorScores det =
            run_baseline(name, emb.rows, baseline_rows, cfg.baselines,
                         stage_seed(cfg.seed, "baseline/" + name, d.id, view));
        if (det.failure) log.info(tag + ": " + name + " failed: " + *det.failure);
        inputs.cells.push_back(make_cell(d.id, view, det, records, parts, cfg.threshold));
      }

      if (cfg.tsne.enabled) {
        const auto rows = subsample_rows(parts.test, cfg.tsne.max_points,
                                         stage_seed(cfg.seed, "tsne-rows", d.id, view));
        const auto n = static_cast<double>(rows.size());
        if (rows.size() >= 4) {
          TsneConfig tcfg;
          tcfg.perplexity = std::min(cfg.tsne.perplexity, (n - 1.0) / 3.0);
          tcfg.iterations = cfg.tsne.iterations;
          tcfg.seed = stage_seed(cfg.seed, "tsne", d.id, view);
          inputs.tsne.push_back({d.id, std::string(to_string(view)),
                                 tsne(select_rows(emb.rows, rows), tcfg),
                                 labels_of(records, rows)});
        }
      }
    }
  }
  inputs.embedding_model = backend.model();
  PipelineResult result;
  result.cells = emit_report(inputs, dir);
  result.embedding_model = inputs.embedding_model;
  return result;
}

}  // namespace provdetect

#endif  // PROVDETECT_PIPELINE_HPP_
