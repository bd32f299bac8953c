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

#ifndef PROVDETECT_TEXTUALIZE_HPP_
#define PROVDETECT_TEXTUALIZE_HPP_

// Renders a record under one context view as a sentence such as
//   "Process 1054 started /bin/bash and connected socket 192.168.1.5:80 and
//    changed /etc/passwd."
// Fragment grammar:
//   exec        started {exe}[ with arguments {a1} {a2} ...]
//   netflow     connected socket {raddr}:{rport}     (IPv6 as [addr]:port)
//   file_write  changed {path}
//   file_read   read {path}
//   syscall     invoked {name}
//   fork        spawned a child process
//   parent      was started by process {ppid} running {parent_exe}
// Fragments appear in the order exec, netflow, events, parent and are joined
// with " and ". A view with no active features renders the fallback
// "Process {pid} performed no recorded activity."

#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "provdetect/record.hpp"

namespace provdetect {

struct SentenceDoc {
  std::size_t record_index = 0;
  ContextView view = ContextView::kPA;
  std::string text;

  friend bool operator==(const SentenceDoc&, const SentenceDoc&) = default;
};

inline std::vector<std::string> sentence_fragments(const ViewFeatures& f) {
  std::vector<std::string> out;
  for (const auto& x : f.execs) {
    std::string s = "started " + x.binary;
    if (!x.args.empty()) {
      s += " with arguments";
      for (const auto& a : x.args) s += " " + a;
    }
    out.push_back(std::move(s));
  }
  for (const auto& n : f.netflows) {
    const std::string host =
        is_ipv6_literal(n.raddr) ? "[" + n.raddr + "]" : n.raddr;
    out.push_back("connected socket " + host + ":" + std::to_string(n.rport));
  }
  for (const auto& e : f.events) {
    switch (e.kind) {
      case EventKind::kFileWrite: out.push_back("changed " + *e.path); break;
      case EventKind::kFileRead: out.push_back("read " + *e.path); break;
      case EventKind::kSyscall: out.push_back("invoked " + e.name); break;
      case EventKind::kFork: out.push_back("spawned a child process"); break;
      case EventKind::kExec: out.push_back("started " + e.name); break;
    }
  }
  if (f.parent) {
    out.push_back("was started by process " + std::to_string(f.parent->pid) +
                  " running " + f.parent->exe);
  }
  return out;
}

inline SentenceDoc render_sentence(const ProcessRecord& r, ContextView view,
                                   std::size_t record_index = 0) {
  const std::vector<std::string> fragments =
      sentence_fragments(project(r, view));
  std::string text = "Process " + std::to_string(r.pid) + " ";
  if (fragments.empty()) {
    text += "performed no recorded activity";
  } else {
    for (std::size_t i = 0; i < fragments.size(); ++i) {
      if (i > 0) text += " and ";
      text += fragments[i];
    }
  }
  text += '.';
  return {record_index, view, std::move(text)};
}

inline std::vector<SentenceDoc> render_corpus(
    const std::vector<ProcessRecord>& records, ContextView view) {
  std::vector<SentenceDoc> docs;
  docs.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    docs.push_back(render_sentence(records[i], view, i));
  }
  return docs;
}

// Corpus dump: one {"record_index","view","text"} object per line.
inline void write_corpus_jsonl(const std::vector<SentenceDoc>& docs,
                               std::ostream& out) {
  for (const auto& d : docs) {
    nlohmann::ordered_json j;
    j["record_index"] = d.record_index;
    j["view"] = to_string(d.view);
    j["text"] = d.text;
    out << j.dump() << '\n';
  }
}

inline std::vector<SentenceDoc> read_corpus_jsonl(std::istream& in) {
  std::vector<SentenceDoc> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto view = parse_view(j.at("view").get<std::string>());
      if (!view) throw Error(Errc::kParseError, "bad view", "view", line_no);
      docs.push_back({j.at("record_index").get<std::size_t>(), *view,
                      j.at("text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::kParseError, e.what(), {}, line_no);
    }
  }
  return docs;
}

}  // namespace provdetect

#endif  // PROVDETECT_TEXTUALIZE_HPP_
