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

#ifndef PROVDETECT_INGEST_HPP_
#define PROVDETECT_INGEST_HPP_

// JSON-lines corpus format. One record per line, keys in the fixed order
//   pid, exe, args, parent, events, netflows, label, ts
// with no insignificant whitespace and '\n' terminators, so files are
// byte-stable and golden-comparable.

#include <algorithm>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "provdetect/error.hpp"
#include "provdetect/record.hpp"
#include "provdetect/rng.hpp"

namespace provdetect {

inline nlohmann::ordered_json record_to_json(const ProcessRecord& r) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["pid"] = r.pid;
  j["exe"] = r.exe ? ordered_json(*r.exe) : ordered_json(nullptr);
  j["args"] = r.args;
  if (r.parent) {
    ordered_json p;
    p["pid"] = r.parent->pid;
    p["exe"] = r.parent->exe;
    j["parent"] = std::move(p);
  } else {
    j["parent"] = nullptr;
  }
  ordered_json events = ordered_json::array();
  for (const auto& e : r.events) {
    ordered_json ej;
    ej["kind"] = to_string(e.kind);
    ej["name"] = e.name;
    ej["path"] = e.path ? ordered_json(*e.path) : ordered_json(nullptr);
    events.push_back(std::move(ej));
  }
  j["events"] = std::move(events);
  ordered_json flows = ordered_json::array();
  for (const auto& f : r.netflows) {
    ordered_json fj;
    fj["raddr"] = f.raddr;
    fj["rport"] = f.rport;
    fj["proto"] = to_string(f.proto);
    flows.push_back(std::move(fj));
  }
  j["netflows"] = std::move(flows);
  j["label"] = r.label ? ordered_json(*r.label) : ordered_json(nullptr);
  j["ts"] = r.ts;
  return j;
}

namespace detail {

[[noreturn]] inline void schema_error(const std::string& what) {
  throw Error(Errc::kInvalidRecord, what, "schema");
}

inline void check_keys(const nlohmann::json& j,
                       std::initializer_list<std::string_view> allowed,
                       std::string_view where) {
  if (!j.is_object()) schema_error(std::string(where) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      schema_error("unknown key '" + key + "' in " + std::string(where));
    }
  }
}

inline std::int64_t get_int(const nlohmann::json& j, std::string_view key) {
  const auto& v = j.at(std::string(key));
  if (!v.is_number_integer()) schema_error(std::string(key) + " must be an integer");
  return v.get<std::int64_t>();
}

inline std::string get_string(const nlohmann::json& j, std::string_view key) {
  const auto& v = j.at(std::string(key));
  if (!v.is_string()) schema_error(std::string(key) + " must be a string");
  return v.get<std::string>();
}

inline std::optional<std::string> get_opt_string(const nlohmann::json& j,
                                                 std::string_view key) {
  auto it = j.find(std::string(key));
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) schema_error(std::string(key) + " must be a string or null");
  return it->get<std::string>();
}

}  // namespace detail

// Missing optional keys take their empty defaults; `pid` is required and
// unknown keys are rejected. The result is validated.
inline ProcessRecord record_from_json(const nlohmann::json& j) {
  using detail::schema_error;
  detail::check_keys(
      j, {"pid", "exe", "args", "parent", "events", "netflows", "label", "ts"},
      "record");
  if (!j.contains("pid")) schema_error("missing pid");
  ProcessRecord r;
  r.pid = detail::get_int(j, "pid");
  r.exe = detail::get_opt_string(j, "exe");
  if (auto it = j.find("args"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) schema_error("args must be an array");
    for (const auto& a : *it) {
      if (!a.is_string()) schema_error("args entries must be strings");
      r.args.push_back(a.get<std::string>());
    }
  }
  if (auto it = j.find("parent"); it != j.end() && !it->is_null()) {
    detail::check_keys(*it, {"pid", "exe"}, "parent");
    r.parent = ParentLink{detail::get_int(*it, "pid"),
                          detail::get_string(*it, "exe")};
  }
  if (auto it = j.find("events"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) schema_error("events must be an array");
    for (const auto& ej : *it) {
      detail::check_keys(ej, {"kind", "name", "path"}, "event");
      auto kind = parse_event_kind(detail::get_string(ej, "kind"));
      if (!kind) schema_error("unknown event kind");
      ProvenanceEvent e;
      e.kind = *kind;
      e.name = ej.contains("name") ? detail::get_string(ej, "name") : "";
      e.path = detail::get_opt_string(ej, "path");
      r.events.push_back(std::move(e));
    }
  }
  if (auto it = j.find("netflows"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) schema_error("netflows must be an array");
    for (const auto& fj : *it) {
      detail::check_keys(fj, {"raddr", "rport", "proto"}, "netflow");
      auto proto = parse_proto(detail::get_string(fj, "proto"));
      if (!proto) schema_error("proto must be tcp or udp");
      r.netflows.push_back({detail::get_string(fj, "raddr"),
                            detail::get_int(fj, "rport"), *proto});
    }
  }
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) schema_error("label must be an integer or null");
    r.label = it->get<int>();
  }
  if (j.contains("ts")) r.ts = detail::get_int(j, "ts");
  validate_record(r);
  return r;
}

// Fail-fast: the first bad line aborts with Error{kParseError, line}.
inline std::vector<ProcessRecord> parse_jsonl(std::istream& in) {
  std::vector<ProcessRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::kParseError, e.what(), {}, line_no);
    } catch (const Error& e) {
      throw Error(Errc::kParseError, e.what(), e.field(), line_no);
    }
  }
  if (in.bad()) throw Error(Errc::kIoError, "read failed");
  return out;
}

inline std::string record_to_line(const ProcessRecord& r) {
  return record_to_json(r).dump() + '\n';
}

inline std::size_t write_jsonl(const std::vector<ProcessRecord>& records,
                               std::ostream& out) {
  std::size_t bytes = 0;
  for (const auto& r : records) {
    const std::string line = record_to_line(r);
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    bytes += line.size();
  }
  out.flush();
  if (!out) throw Error(Errc::kIoError, "write failed");
  return bytes;
}

// Records are identified by their position in the input list. Index vectors
// are sorted ascending; `excluded` holds anomalies that had nowhere to go
// because both held-out fractions were zero.
struct DatasetSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::vector<std::size_t> excluded;
  std::vector<Error> warnings;
};

inline DatasetSplit split(const std::vector<ProcessRecord>& records,
                          double val_fraction, double test_fraction,
                          std::uint64_t seed) {
  if (!(val_fraction >= 0.0 && val_fraction < 1.0 && test_fraction >= 0.0 &&
        test_fraction < 1.0 && val_fraction + test_fraction < 1.0)) {
    throw Error(Errc::kInvalidConfig,
                "split fractions must lie in [0,1) with sum < 1");
  }
  std::vector<std::size_t> benign;
  std::vector<std::size_t> anomalous;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].label) {
      throw Error(Errc::kInvalidRecord,
                  "split requires labels (record " + std::to_string(i) + ")",
                  "label");
    }
    (*records[i].label == 1 ? anomalous : benign).push_back(i);
  }
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(benign));
  rng.shuffle(std::span<std::size_t>(anomalous));

  DatasetSplit out;
  const auto n_benign = static_cast<double>(benign.size());
  const auto n_val = static_cast<std::size_t>(std::llround(n_benign * val_fraction));
  const auto n_test = std::min<std::size_t>(
      static_cast<std::size_t>(std::llround(n_benign * test_fraction)),
      benign.size() - n_val);
  out.validation.assign(benign.begin(), benign.begin() + n_val);
  out.test.assign(benign.begin() + n_val, benign.begin() + n_val + n_test);
  out.train.assign(benign.begin() + n_val + n_test, benign.end());

  const double held_out = val_fraction + test_fraction;
  if (held_out > 0.0) {
    const auto a_val = static_cast<std::size_t>(std::llround(
        static_cast<double>(anomalous.size()) * val_fraction / held_out));
    out.validation.insert(out.validation.end(), anomalous.begin(),
                          anomalous.begin() + a_val);
    out.test.insert(out.test.end(), anomalous.begin() + a_val, anomalous.end());
    if (anomalous.empty()) {
      out.warnings.emplace_back(Errc::kNoAnomalies,
                                "validation/test contain no anomalies");
    }
  } else {
    out.excluded = anomalous;
  }
  for (auto* part : {&out.train, &out.validation, &out.test, &out.excluded}) {
    std::sort(part->begin(), part->end());
  }
  return out;
}

}  // namespace provdetect

#endif  // PROVDETECT_INGEST_HPP_
