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

#ifndef PROVDETECT_REPORT_HPP_
#define PROVDETECT_REPORT_HPP_

// Plot-ready report directory:
//   heatmap.csv        dataset,view,<detector...>   AUC with 4 decimals
//   roc/<dataset>_<view>_<detector>.csv             fpr,tpr,threshold
//   tsne.csv           dataset,view,x,y,label
//   summary.json       {"embedding_model":...,"cells":[{dataset,view,
//                       detector,auc,threshold,tp,fp,tn,fn}]}
// Detector columns follow the fixed order MPNet-AE, IForest, OC-SVM, PCA;
// any other detector is appended in first-seen order.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "provdetect/error.hpp"
#include "provdetect/matrix.hpp"
#include "provdetect/metrics.hpp"

namespace provdetect {

inline const std::vector<std::string> kDetectorOrder = {"MPNet-AE", "IForest", "OC-SVM", "PCA"};

struct EvalCell {
  std::string dataset;
  std::string view;
  std::string detector;
  std::vector<ScoredSample> samples;
  std::optional<double> threshold;
  // Set when the detector could not produce scores; the cell is reported as
  // null with this reason.
  std::optional<std::string> failure;
};

struct CellResult {
  std::string dataset;
  std::string view;
  std::string detector;
  std::optional<double> auc;
  std::optional<double> threshold;
  std::optional<Confusion> confusion;
  std::optional<std::string> reason;
  std::vector<RocPoint> roc;
};

struct TsneSeries {
  std::string dataset;
  std::string view;
  Matrix coords;  // n x 2
  std::vector<int> labels;
};

struct ReportInputs {
  std::vector<EvalCell> cells;
  std::vector<TsneSeries> tsne;
  std::string embedding_model;
};

inline std::string format_double(double v, const char* fmt = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

inline std::string file_safe(std::string s) {
  for (char& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '.';
    if (!ok) c = '_';
  }
  return s;
}

inline CellResult evaluate_cell(const EvalCell& cell) {
  CellResult r{cell.dataset, cell.view, cell.detector, std::nullopt, cell.threshold,
               std::nullopt, cell.failure, {}};
  if (cell.failure) return r;
  try {
    r.auc = auc_roc(cell.samples);
    r.roc = roc_curve(cell.samples);
  } catch (const Error& e) {
    if (e.code() != Errc::kSingleClass) throw;
    r.reason = e.what();
  }
  if (cell.threshold) r.confusion = classify(cell.samples, *cell.threshold);
  return r;
}

inline std::vector<std::string> detector_columns(const std::vector<CellResult>& results) {
  std::vector<std::string> cols;
  for (const auto& name : kDetectorOrder) {
    if (std::any_of(results.begin(), results.end(),
                    [&](const CellResult& r) { return r.detector == name; })) {
      cols.push_back(name);
    }
  }
  for (const auto& r : results) {
    if (std::find(cols.begin(), cols.end(), r.detector) == cols.end()) {
      cols.push_back(r.detector);
    }
  }
  return cols;
}

namespace report_detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(Errc::kIoError, "cannot write " + path.string());
}

}  // namespace report_detail

inline std::string heatmap_csv(const std::vector<CellResult>& results) {
  const auto cols = detector_columns(results);
  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& r : results) {
    std::pair<std::string, std::string> key{r.dataset, r.view};
    if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
  }
  std::string csv = "dataset,view";
  for (const auto& c : cols) csv += "," + c;
  csv += '\n';
  for (const auto& [dataset, view] : rows) {
    csv += dataset + "," + view;
    for (const auto& c : cols) {
      csv += ',';
      for (const auto& r : results) {
        if (r.dataset == dataset && r.view == view && r.detector == c && r.auc) {
          csv += format_double(*r.auc, "%.4f");
          break;
        }
      }
    }
    csv += '\n';
  }
  return csv;
}

inline nlohmann::ordered_json summary_json(const std::vector<CellResult>& results,
                                           const std::string& embedding_model) {
  using nlohmann::ordered_json;
  ordered_json cells = ordered_json::array();
  for (const auto& r : results) {
    ordered_json c;
    c["dataset"] = r.dataset;
    c["view"] = r.view;
    c["detector"] = r.detector;
    c["auc"] = r.auc ? ordered_json(*r.auc) : ordered_json(nullptr);
    c["threshold"] = r.threshold ? ordered_json(*r.threshold) : ordered_json(nullptr);
    for (const char* k : {"tp", "fp", "tn", "fn"}) c[k] = nullptr;
    if (r.confusion) {
      c["tp"] = r.confusion->tp;
      c["fp"] = r.confusion->fp;
      c["tn"] = r.confusion->tn;
      c["fn"] = r.confusion->fn;
    }
    if (r.reason) c["reason"] = *r.reason;
    cells.push_back(std::move(c));
  }
  ordered_json j;
  j["embedding_model"] = embedding_model;
  j["cells"] = std::move(cells);
  return j;
}

inline std::vector<CellResult> emit_report(const ReportInputs& inputs,
                                           const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "roc");
  std::vector<CellResult> results;
  results.reserve(inputs.cells.size());
  for (const auto& cell : inputs.cells) results.push_back(evaluate_cell(cell));

  report_detail::write_text(dir / "heatmap.csv", heatmap_csv(results));
  for (const auto& r : results) {
    if (r.roc.empty()) continue;
    std::string csv = "fpr,tpr,threshold\n";
    for (const auto& p : r.roc) {
      csv += format_double(p.fpr) + "," + format_double(p.tpr) + "," +
             format_double(p.threshold) + "\n";
    }
    report_detail::write_text(
        dir / "roc" / (file_safe(r.dataset) + "_" + file_safe(r.view) + "_" +
                       file_safe(r.detector) + ".csv"),
        csv);
  }
  std::string tsne_csv = "dataset,view,x,y,label\n";
  for (const auto& s : inputs.tsne) {
    for (Eigen::Index i = 0; i < s.coords.rows(); ++i) {
      tsne_csv += s.dataset + "," + s.view + "," + format_double(s.coords(i, 0)) + "," +
                  format_double(s.coords(i, 1)) + "," +
                  std::to_string(s.labels[static_cast<std::size_t>(i)]) + "\n";
    }
  }
  report_detail::write_text(dir / "tsne.csv", tsne_csv);
  report_detail::write_text(dir / "summary.json",
                            summary_json(results, inputs.embedding_model).dump(2) + "\n");
  return results;
}

}  // namespace provdetect

#endif  // PROVDETECT_REPORT_HPP_
