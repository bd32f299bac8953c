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

#ifndef PROVDETECT_CLI_HPP_
#define PROVDETECT_CLI_HPP_

// provdetect <subcommand> [options]
//
// Exit status: 0 success, 1 module error (one "provdetect: error: ..." line
// on stderr), 2 usage error.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "provdetect/config.hpp"
#include "provdetect/pipeline.hpp"

namespace provdetect::cli {

struct Options {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> view;
  std::optional<std::string> backend;
  std::optional<std::string> url;
  std::optional<std::string> out;
  std::optional<std::string> in;
  std::optional<std::string> embeddings;
  std::optional<std::string> model;
  std::optional<std::string> dataset;
  std::vector<std::string> scores;
};

// Score files: header "record,<detector>", then one "<index>,<score>" line per
// record in input order.
inline void write_scores_csv(const std::filesystem::path& path, const std::string& detector,
                             const std::vector<double>& scores) {
  std::string csv = "record," + detector + "\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    csv += std::to_string(i) + "," + format_double(scores[i]) + "\n";
  }
  detail::write_file_atomic(path, csv);
}

inline DetectorScores read_scores_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("record,", 0) != 0) {
    throw Error(Errc::kParseError, "missing 'record,<detector>' header", "header", 1);
  }
  DetectorScores out{line.substr(7), {}, std::nullopt};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("no comma");
      if (std::stoull(line.substr(0, comma)) != out.scores.size()) {
        throw Error(Errc::kParseError, "record indices must be 0..n-1 in order", "record",
                    line_no);
      }
      out.scores.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::logic_error&) {
      throw Error(Errc::kParseError, "malformed score line", "score", line_no);
    }
  }
  return out;
}

namespace cli_detail {

inline PipelineConfig resolve_config(const Options& o) {
  PipelineConfig c = o.config ? load_pipeline_config(*o.config) : PipelineConfig{};
  if (o.seed) c.seed = *o.seed;
  if (o.view) c.views = {config_detail::view_from(*o.view)};
  if (o.backend) {
    if (*o.backend == "hash") {
      c.embed.backend = BackendKind::kHash;
    } else if (*o.backend == "remote") {
      c.embed.backend = BackendKind::kRemote;
    } else {
      throw Error(Errc::kInvalidConfig, "backend must be hash or remote", "backend");
    }
  }
  if (o.url) {
    c.embed.url = *o.url;
  } else if (const char* env = std::getenv("PROVDETECT_EMBED_URL"); env && *env) {
    c.embed.url = env;
  }
  return c;
}

inline const DatasetConfig& pick_dataset(const PipelineConfig& c, const Options& o) {
  if (!o.dataset) return c.datasets.front();
  for (const auto& d : c.datasets) {
    if (d.id == *o.dataset) return d;
  }
  throw Error(Errc::kInvalidConfig, "no dataset '" + *o.dataset + "' in config", "dataset");
}

inline const std::string& require(const std::optional<std::string>& v, const char* flag) {
  if (!v) throw CLI::RequiredError(flag);
  return *v;
}

inline ContextView single_view(const PipelineConfig& c) { return c.views.front(); }

inline std::vector<ProcessRecord> records_for(const PipelineConfig& c, const Options& o) {
  if (o.in) return read_records(*o.in);
  return load_dataset(c, pick_dataset(c, o));
}

inline void check_rows(const EmbeddingMatrix& e, std::size_t n_records) {
  if (static_cast<std::size_t>(e.rows.rows()) != n_records) {
    throw Error(Errc::kDimensionMismatch,
                "embedding rows (" + std::to_string(e.rows.rows()) +
                    ") differ from record count (" + std::to_string(n_records) + ")");
  }
}

inline std::string with_parent(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  return path;
}

}  // namespace cli_detail

inline int dispatch(const std::string& cmd, const Options& o, std::ostream& log) {
  using namespace cli_detail;
  const PipelineConfig cfg = resolve_config(o);
  const DatasetConfig& ds = pick_dataset(cfg, o);

  if (cmd == "synth") {
    const auto records = generate_dataset(seeded_synth(cfg, ds));
    std::ostringstream buf;
    write_jsonl(records, buf);
    detail::write_file_atomic(with_parent(require(o.out, "--out")), buf.str());
    log << "wrote " << records.size() << " records\n";
  } else if (cmd == "textualize") {
    const auto records = records_for(cfg, o);
    std::ostringstream buf;
    write_corpus_jsonl(render_corpus(records, single_view(cfg)), buf);
    detail::write_file_atomic(with_parent(require(o.out, "--out")), buf.str());
  } else if (cmd == "embed") {
    std::ifstream in(require(o.in, "--in"));
    if (!in) throw Error(Errc::kIoError, "cannot open " + *o.in);
    const auto corpus = read_corpus_jsonl(in);
    auto backend = make_backend(cfg.embed);
    const auto out = with_parent(require(o.out, "--out"));
    // The output doubles as the cache: an up-to-date file is left alone.
    embed_corpus(corpus, *backend, out);
    log << "embedded " << corpus.size() << " sentences with " << backend->model() << "\n";
  } else if (cmd == "train") {
    const auto emb = load_embeddings(require(o.embeddings, "--embeddings"));
    const auto records = records_for(cfg, o);
    check_rows(emb, records.size());
    const auto parts = split_dataset(cfg, ds, records);
    auto model = init_autoencoder<float>(architecture_for(cfg),
                                         stage_seed(cfg.seed, "ae-init", ds.id, single_view(cfg)));
    TrainConfig tc = cfg.train;
    tc.seed = stage_seed(cfg.seed, "ae-train", ds.id, single_view(cfg));
    const auto history = fit(model, select_rows(emb.rows, parts.train), tc);
    save_model(model, with_parent(require(o.out, "--out")));
    for (std::size_t e = 0; e < history.train_mse.size(); ++e) {
      log << "epoch " << e + 1 << " train_mse " << format_double(history.train_mse[e])
          << " val_mse " << format_double(history.val_mse[e]) << "\n";
    }
  } else if (cmd == "score") {
    const auto model = load_model<float>(require(o.model, "--model"));
    const auto emb = load_embeddings(require(o.embeddings, "--embeddings"));
    write_scores_csv(with_parent(require(o.out, "--out")), kAutoencoderName,
                     score(model, emb.rows));
  } else if (cmd == "baselines") {
    const auto emb = load_embeddings(require(o.embeddings, "--embeddings"));
    const auto records = records_for(cfg, o);
    check_rows(emb, records.size());
    const auto parts = split_dataset(cfg, ds, records);
    const auto view = single_view(cfg);
    const auto rows = subsample_rows(parts.train, cfg.baselines.max_train,
                                     stage_seed(cfg.seed, "baseline-rows", ds.id, view));
    const std::filesystem::path dir = require(o.out, "--out");
    std::filesystem::create_directories(dir);
    for (const auto& name : cfg.baselines.detectors) {
      const auto det = run_baseline(name, emb.rows, rows, cfg.baselines,
                                    stage_seed(cfg.seed, "baseline/" + name, ds.id, view));
      if (det.failure) throw Error(Errc::kConvergenceFailure, name + ": " + *det.failure);
      write_scores_csv(dir / (file_safe(name) + ".csv"), name, det.scores);
    }
  } else if (cmd == "eval") {
    if (o.scores.empty()) throw CLI::RequiredError("--scores");
    const auto records = records_for(cfg, o);
    const auto parts = split_dataset(cfg, ds, records);
    ReportInputs inputs;
    for (const auto& path : o.scores) {
      const auto det = read_scores_csv(path);
      if (det.scores.size() != records.size()) {
        throw Error(Errc::kDimensionMismatch, path + ": score count differs from record count");
      }
      inputs.cells.push_back(make_cell(ds.id, single_view(cfg), det, records, parts,
                                       cfg.threshold));
    }
    inputs.embedding_model = "";
    const auto results = emit_report(inputs, require(o.out, "--out"));
    for (const auto& r : results) {
      log << r.detector << " auc " << (r.auc ? format_double(*r.auc, "%.4f") : "null") << "\n";
    }
  } else if (cmd == "tsne") {
    const auto emb = load_embeddings(require(o.embeddings, "--embeddings"));
    const auto records = records_for(cfg, o);
    check_rows(emb, records.size());
    std::vector<std::size_t> all(records.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto view = single_view(cfg);
    const auto rows = subsample_rows(all, cfg.tsne.max_points,
                                     stage_seed(cfg.seed, "tsne-rows", ds.id, view));
    TsneConfig tcfg;
    tcfg.perplexity = cfg.tsne.perplexity;
    tcfg.iterations = cfg.tsne.iterations;
    tcfg.seed = stage_seed(cfg.seed, "tsne", ds.id, view);
    const Matrix y = tsne(select_rows(emb.rows, rows), tcfg);
    std::string csv = "record,x,y,label\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      csv += std::to_string(rows[i]) + "," + format_double(y(r, 0)) + "," +
             format_double(y(r, 1)) + "," + std::to_string(records[rows[i]].label.value_or(0)) +
             "\n";
    }
    detail::write_file_atomic(with_parent(require(o.out, "--out")), csv);
  } else if (cmd == "pipeline") {
    PipelineConfig c = cfg;
    if (o.out) c.report_dir = *o.out;
    auto backend = make_backend(c.embed);
    PipelineLog pl;
    pl.info = [&log](const std::string& msg) { log << msg << "\n"; };
    const auto result = run_pipeline(c, *backend, pl);
    log << "report: " << c.report_dir.string() << " (" << result.cells.size() << " cells)\n";
  }
  return 0;
}

inline const std::vector<std::string> kSubcommands = {
    "synth", "textualize", "embed", "train", "score", "baselines", "eval", "tsne", "pipeline"};

inline int run(int argc, const char* const* argv, std::ostream& log = std::cerr) {
  CLI::App app{"provenance anomaly detection with sentence embeddings", "provdetect"};
  app.require_subcommand(1, 1);
  Options o;
  for (const auto& name : kSubcommands) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", o.config, "experiment JSON");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--view", o.view, "context view")
        ->check(CLI::IsMember({"PE", "PX", "PP", "PN", "PA"}));
    sub->add_option("--backend", o.backend, "embedding backend")
        ->check(CLI::IsMember({"hash", "remote"}));
    sub->add_option("--url", o.url, "embedding service base URL");
    sub->add_option("--out", o.out, "output path");
    sub->add_option("--dataset", o.dataset, "dataset id from the config");
    if (name != "synth" && name != "pipeline") {
      sub->add_option("--in", o.in, "input records (JSONL) or corpus for embed");
    }
    if (name == "train" || name == "score" || name == "baselines" || name == "tsne") {
      sub->add_option("--embeddings", o.embeddings, "embedding matrix file");
    }
    if (name == "score") sub->add_option("--model", o.model, "autoencoder checkpoint");
    if (name == "eval") sub->add_option("--scores", o.scores, "score CSV files");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return dispatch(cmd, o, log);
  } catch (const CLI::RequiredError& e) {
    log << "provdetect " << cmd << ": " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    log << "provdetect: error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "provdetect: error: " << to_string(Errc::kIoError) << ": " << e.what() << "\n";
    return 1;
  }
}

}  // namespace provdetect::cli

#endif  // PROVDETECT_CLI_HPP_
