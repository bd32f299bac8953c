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

#ifndef PROVDETECT_RECORD_HPP_
#define PROVDETECT_RECORD_HPP_

#include <arpa/inet.h>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "provdetect/error.hpp"

namespace provdetect {

enum class EventKind { kSyscall, kFileRead, kFileWrite, kExec, kFork };

inline std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kSyscall: return "syscall";
    case EventKind::kFileRead: return "file_read";
    case EventKind::kFileWrite: return "file_write";
    case EventKind::kExec: return "exec";
    case EventKind::kFork: return "fork";
  }
  return "?";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
  if (s == "syscall") return EventKind::kSyscall;
  if (s == "file_read") return EventKind::kFileRead;
  if (s == "file_write") return EventKind::kFileWrite;
  if (s == "exec") return EventKind::kExec;
  if (s == "fork") return EventKind::kFork;
  return std::nullopt;
}

enum class Proto { kTcp, kUdp };

inline std::string_view to_string(Proto p) {
  return p == Proto::kTcp ? "tcp" : "udp";
}

inline std::optional<Proto> parse_proto(std::string_view s) {
  if (s == "tcp") return Proto::kTcp;
  if (s == "udp") return Proto::kUdp;
  return std::nullopt;
}

struct ProvenanceEvent {
  EventKind kind = EventKind::kSyscall;
  std::string name;                 // syscall name or binary path
  std::optional<std::string> path;  // required for file_read / file_write

  friend bool operator==(const ProvenanceEvent&,
                         const ProvenanceEvent&) = default;
};

struct NetFlow {
  std::string raddr;
  std::int64_t rport = 0;
  Proto proto = Proto::kTcp;

  friend bool operator==(const NetFlow&, const NetFlow&) = default;
};

struct ParentLink {
  std::int64_t pid = 0;
  std::string exe;

  friend bool operator==(const ParentLink&, const ParentLink&) = default;
};

// One process's provenance summary. Timestamps are carried through ingest and
// serialization but never read by the detectors.
struct ProcessRecord {
  std::int64_t pid = 0;
  std::optional<std::string> exe;
  std::vector<std::string> args;
  std::optional<ParentLink> parent;
  std::vector<ProvenanceEvent> events;
  std::vector<NetFlow> netflows;
  std::optional<int> label;  // 0 benign, 1 attack
  std::int64_t ts = 0;

  friend bool operator==(const ProcessRecord&, const ProcessRecord&) = default;
};

enum class ContextView { kPE, kPX, kPP, kPN, kPA };

inline constexpr std::array<ContextView, 5> kAllViews = {
    ContextView::kPE, ContextView::kPX, ContextView::kPP, ContextView::kPN,
    ContextView::kPA};

inline std::string_view to_string(ContextView v) {
  switch (v) {
    case ContextView::kPE: return "PE";
    case ContextView::kPX: return "PX";
    case ContextView::kPP: return "PP";
    case ContextView::kPN: return "PN";
    case ContextView::kPA: return "PA";
  }
  return "?";
}

inline std::optional<ContextView> parse_view(std::string_view s) {
  for (ContextView v : kAllViews) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

inline bool is_ip_literal(const std::string& s) {
  unsigned char buf[sizeof(in6_addr)];
  return inet_pton(AF_INET, s.c_str(), buf) == 1 ||
         inet_pton(AF_INET6, s.c_str(), buf) == 1;
}

inline bool is_ipv6_literal(std::string_view s) {
  return s.find(':') != std::string_view::npos;
}

// Throws Error{kInvalidRecord} naming the first violated field.
inline const ProcessRecord& validate_record(const ProcessRecord& r) {
  auto fail = [](std::string field, std::string reason) {
    throw Error(Errc::kInvalidRecord, std::move(reason), std::move(field));
  };
  if (r.pid < 0) fail("pid", "must be >= 0, got " + std::to_string(r.pid));
  if (r.exe && r.exe->empty()) fail("exe", "must be non-empty when present");
  if (r.label && *r.label != 0 && *r.label != 1) {
    fail("label", "must be 0 or 1, got " + std::to_string(*r.label));
  }
  if (r.parent) {
    if (r.parent->pid < 0) fail("parent.pid", "must be >= 0");
    if (r.parent->exe.empty()) fail("parent.exe", "must be non-empty");
  }
  for (const auto& e : r.events) {
    switch (e.kind) {
      case EventKind::kFileRead:
      case EventKind::kFileWrite:
        if (!e.path || e.path->empty()) {
          fail("events.path", std::string(to_string(e.kind)) +
                                  " event requires a path");
        }
        break;
      case EventKind::kExec:
        if (e.name.empty()) fail("events.name", "exec event requires a path");
        break;
      case EventKind::kSyscall:
        if (e.name.empty()) fail("events.name", "syscall requires a name");
        break;
      case EventKind::kFork:
        break;
    }
  }
  for (const auto& f : r.netflows) {
    if (f.rport < 0 || f.rport > 65535) {
      fail("rport", "out of range 0..65535: " + std::to_string(f.rport));
    }
    if (!is_ip_literal(f.raddr)) {
      fail("raddr", "not an IP literal: '" + f.raddr + "'");
    }
  }
  return r;
}

struct ExecFeature {
  std::string binary;
  std::vector<std::string> args;

  friend bool operator==(const ExecFeature&, const ExecFeature&) = default;
};

// Fragments of a record visible under one view. Each view fills exactly one
// member; PA fills all of them.
struct ViewFeatures {
  std::vector<ExecFeature> execs;        // PX: record exe + args, exec events
  std::vector<NetFlow> netflows;         // PN
  std::vector<ProvenanceEvent> events;   // PE: syscall, file and fork events
  std::optional<ParentLink> parent;      // PP

  bool empty() const {
    return execs.empty() && netflows.empty() && events.empty() && !parent;
  }

  friend bool operator==(const ViewFeatures&, const ViewFeatures&) = default;
};

inline ViewFeatures project(const ProcessRecord& r, ContextView view) {
  const bool all = view == ContextView::kPA;
  ViewFeatures out;
  if (all || view == ContextView::kPX) {
    if (r.exe) out.execs.push_back({*r.exe, r.args});
    for (const auto& e : r.events) {
      if (e.kind == EventKind::kExec) out.execs.push_back({e.name, {}});
    }
  }
  if (all || view == ContextView::kPN) out.netflows = r.netflows;
  if (all || view == ContextView::kPE) {
    for (const auto& e : r.events) {
      if (e.kind != EventKind::kExec) out.events.push_back(e);
    }
  }
  if (all || view == ContextView::kPP) out.parent = r.parent;
  return out;
}

}  // namespace provdetect

#endif  // PROVDETECT_RECORD_HPP_
