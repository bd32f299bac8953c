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

#ifndef PROVDETECT_SYNTH_HPP_
#define PROVDETECT_SYNTH_HPP_

// Seeded generator of benign provenance corpora with injected APT-like
// campaigns. Benign records come from four template profiles; anomalies use
// binaries and addresses from pools that never occur in benign traffic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "provdetect/error.hpp"
#include "provdetect/record.hpp"
#include "provdetect/rng.hpp"

namespace provdetect {

enum class CampaignStage {
  kDropperExec,
  kC2Netflow,
  kCredentialFileWrite,
  kLateralFork,
};

inline std::string_view to_string(CampaignStage s) {
  switch (s) {
    case CampaignStage::kDropperExec: return "dropper_exec";
    case CampaignStage::kC2Netflow: return "c2_netflow";
    case CampaignStage::kCredentialFileWrite: return "credential_file_write";
    case CampaignStage::kLateralFork: return "lateral_fork";
  }
  return "?";
}

inline std::optional<CampaignStage> parse_campaign_stage(std::string_view s) {
  for (auto st : {CampaignStage::kDropperExec, CampaignStage::kC2Netflow,
                  CampaignStage::kCredentialFileWrite,
                  CampaignStage::kLateralFork}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

namespace synth_vocab {

inline const std::vector<std::string> kProfiles = {
    "shell_session", "web_server", "cron_job", "package_manager"};

inline const std::vector<std::string> kShellBinaries = {
    "/bin/bash", "/usr/bin/vim", "/bin/ls", "/usr/bin/less", "/usr/bin/git"};
inline const std::vector<std::string> kWebBinaries = {"/usr/sbin/nginx",
                                                      "/usr/sbin/apache2"};
inline const std::vector<std::string> kCronBinaries = {
    "/usr/sbin/cron", "/usr/sbin/logrotate", "/usr/bin/find",
    "/usr/bin/updatedb"};
inline const std::vector<std::string> kPackageBinaries = {
    "/usr/bin/apt-get", "/usr/bin/apt", "/usr/bin/dpkg"};
inline const std::vector<std::string> kParentBinaries = {
    "/lib/systemd/systemd", "/usr/sbin/sshd", "/bin/bash", "/usr/bin/sudo",
    "/usr/sbin/cron"};

inline const std::vector<std::string> kUsers = {"alice", "bob", "carol",
                                                "dave"};
inline const std::vector<std::string> kHomeFiles = {
    "notes.txt", ".bashrc", ".profile", "project/main.c", "project/Makefile",
    "report.md"};
inline const std::vector<std::string> kShellSyscalls = {"read", "write",
                                                        "openat", "close",
                                                        "stat"};
inline const std::vector<std::string> kWebSyscalls = {
    "accept4", "sendfile", "epoll_wait", "recvfrom", "close"};
inline const std::vector<std::string> kWebFiles = {
    "/var/www/html/index.html", "/var/www/html/style.css",
    "/var/www/html/app.js", "/var/www/html/favicon.ico"};
inline const std::vector<std::string> kCronSyscalls = {"stat", "unlink",
                                                       "rename", "openat"};
inline const std::vector<std::string> kPackages = {"curl", "htop", "vim",
                                                   "git", "tmux", "jq"};
inline const std::vector<std::string> kPackageSyscalls = {"openat", "write",
                                                          "rename", "fsync"};

inline const std::vector<std::string> kLanHosts = {
    "10.0.0.5", "10.0.0.7", "192.168.1.20", "192.168.1.21"};
inline const std::vector<std::string> kWebClients = {
    "192.168.1.30", "192.168.1.31", "192.168.1.32", "192.168.1.33",
    "192.168.1.34", "192.168.1.35", "192.168.1.36", "192.168.1.37"};
inline const std::vector<std::string> kMirrors = {
    "91.189.91.38", "91.189.91.39", "185.125.190.36"};
inline const std::string kDnsServer = "10.0.0.2";

inline const std::vector<std::string> kDefaultRareBinaries = {
    "/tmp/.ICE-unix/.x/kworkerd", "/dev/shm/.cache/sshd-helper",
    "/var/tmp/.font-unix/xmrig", "/tmp/.X11-unix/.b/beacon",
    "/dev/shm/mimipenguin"};
inline const std::vector<std::string> kDefaultRareIps = {
    "203.0.113.66", "198.51.100.23", "185.220.101.4", "45.142.212.61",
    "91.219.236.18"};
inline const std::vector<std::string> kRareArgs = {"--daemon", "-q",
                                                   "--no-log", "-k"};
inline const std::vector<std::int64_t> kC2Ports = {4444, 1337, 8443, 6667};

}  // namespace synth_vocab

// Every binary and IP literal a benign profile can emit.
struct BenignVocabulary {
  std::set<std::string> binaries;
  std::set<std::string> ips;
};

inline BenignVocabulary benign_vocabulary() {
  using namespace synth_vocab;
  BenignVocabulary v;
  for (const auto* pool : {&kShellBinaries, &kWebBinaries, &kCronBinaries,
                           &kPackageBinaries, &kParentBinaries}) {
    v.binaries.insert(pool->begin(), pool->end());
  }
  for (const auto* pool : {&kLanHosts, &kWebClients, &kMirrors}) {
    v.ips.insert(pool->begin(), pool->end());
  }
  v.ips.insert(kDnsServer);
  return v;
}

struct CampaignConfig {
  std::vector<CampaignStage> stages = {
      CampaignStage::kDropperExec, CampaignStage::kC2Netflow,
      CampaignStage::kCredentialFileWrite, CampaignStage::kLateralFork};
  std::vector<std::string> rare_binary_pool = synth_vocab::kDefaultRareBinaries;
  std::vector<std::string> rare_ip_pool = synth_vocab::kDefaultRareIps;
};

struct SynthConfig {
  std::int64_t n_processes = 10000;
  double contamination = 0.0;
  std::vector<std::string> benign_profiles = synth_vocab::kProfiles;
  std::uint64_t seed = 0;
  CampaignConfig campaign;
};

inline void validate_campaign(const CampaignConfig& c) {
  if (c.stages.empty()) {
    throw Error(Errc::kInvalidConfig, "campaign needs at least one stage",
                "stages");
  }
  if (c.rare_binary_pool.empty() || c.rare_ip_pool.empty()) {
    throw Error(Errc::kInvalidConfig, "rare pools must be non-empty",
                "rare_binary_pool");
  }
  const BenignVocabulary vocab = benign_vocabulary();
  for (const auto& b : c.rare_binary_pool) {
    if (vocab.binaries.contains(b)) {
      throw Error(Errc::kInvalidConfig, "'" + b + "' is a benign binary",
                  "rare_binary_pool");
    }
  }
  for (const auto& ip : c.rare_ip_pool) {
    if (vocab.ips.contains(ip)) {
      throw Error(Errc::kInvalidConfig, "'" + ip + "' is a benign address",
                  "rare_ip_pool");
    }
    if (!is_ip_literal(ip)) {
      throw Error(Errc::kInvalidConfig, "'" + ip + "' is not an IP literal",
                  "rare_ip_pool");
    }
  }
}

inline void validate_synth_config(const SynthConfig& cfg) {
  if (cfg.n_processes < 1) {
    throw Error(Errc::kInvalidConfig, "n_processes must be >= 1",
                "n_processes");
  }
  if (!(cfg.contamination >= 0.0 && cfg.contamination < 1.0)) {
    throw Error(Errc::kInvalidConfig, "contamination must lie in [0, 1)",
                "contamination");
  }
  if (cfg.benign_profiles.empty()) {
    throw Error(Errc::kInvalidConfig, "no benign profiles", "benign_profiles");
  }
  for (const auto& p : cfg.benign_profiles) {
    if (std::find(synth_vocab::kProfiles.begin(), synth_vocab::kProfiles.end(),
                  p) == synth_vocab::kProfiles.end()) {
      throw Error(Errc::kInvalidConfig, "unknown profile '" + p + "'",
                  "benign_profiles");
    }
  }
  validate_campaign(cfg.campaign);
}

inline std::int64_t anomaly_count(const SynthConfig& cfg) {
  return std::llround(cfg.contamination *
                      static_cast<double>(cfg.n_processes));
}

namespace detail {

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& pool) {
  return pool[rng.below(pool.size())];
}

inline ProvenanceEvent syscall(std::string name) {
  return {EventKind::kSyscall, std::move(name), std::nullopt};
}
inline ProvenanceEvent file_read(std::string path) {
  return {EventKind::kFileRead, "read", std::move(path)};
}
inline ProvenanceEvent file_write(std::string path) {
  return {EventKind::kFileWrite, "write", std::move(path)};
}

inline std::string home_file(Rng& rng) {
  using namespace synth_vocab;
  return "/home/" + pick(rng, kUsers) + "/" + pick(rng, kHomeFiles);
}

inline void shell_session(Rng& rng, ProcessRecord& r) {
  using namespace synth_vocab;
  const std::string& exe = pick(rng, kShellBinaries);
  r.exe = exe;
  if (exe == "/usr/bin/vim" || exe == "/usr/bin/less") {
    r.args = {home_file(rng)};
  } else if (exe == "/bin/ls") {
    r.args = {"-la"};
  } else if (exe == "/usr/bin/git") {
    static const std::vector<std::string> kGit = {"status", "pull", "log",
                                                  "diff"};
    r.args = {pick(rng, kGit)};
  }
  const auto n_sys = rng.between(1, 3);
  for (std::int64_t i = 0; i < n_sys; ++i) {
    r.events.push_back(syscall(pick(rng, kShellSyscalls)));
  }
  const auto n_read = rng.between(1, 2);
  for (std::int64_t i = 0; i < n_read; ++i) {
    r.events.push_back(file_read(home_file(rng)));
  }
  if (exe == "/usr/bin/vim" && !r.args.empty()) {
    r.events.push_back(file_write(r.args.front()));
  }
  if (exe == "/usr/bin/git" || rng.bernoulli(0.1)) {
    r.netflows.push_back({pick(rng, kLanHosts), rng.bernoulli(0.5) ? 22 : 443,
                          Proto::kTcp});
  }
  const bool from_ssh = exe == "/bin/bash" || rng.bernoulli(0.3);
  r.parent = ParentLink{rng.between(300, 65535),
                        from_ssh ? "/usr/sbin/sshd" : "/bin/bash"};
}

inline void web_server(Rng& rng, ProcessRecord& r) {
  using namespace synth_vocab;
  const std::string& exe = pick(rng, kWebBinaries);
  const bool nginx = exe == "/usr/sbin/nginx";
  r.exe = exe;
  r.args = nginx ? std::vector<std::string>{"-c", "/etc/nginx/nginx.conf"}
                 : std::vector<std::string>{"-k", "start"};
  const auto n_flows = rng.between(1, 3);
  for (std::int64_t i = 0; i < n_flows; ++i) {
    r.netflows.push_back(
        {pick(rng, kWebClients), rng.bernoulli(0.7) ? 443 : 80, Proto::kTcp});
  }
  const auto n_sys = rng.between(1, 3);
  for (std::int64_t i = 0; i < n_sys; ++i) {
    r.events.push_back(syscall(pick(rng, kWebSyscalls)));
  }
  r.events.push_back(file_read(pick(rng, kWebFiles)));
  r.events.push_back(file_write(nginx ? "/var/log/nginx/access.log"
                                      : "/var/log/apache2/access.log"));
  r.parent = ParentLink{1, "/lib/systemd/systemd"};
}

inline void cron_job(Rng& rng, ProcessRecord& r) {
  using namespace synth_vocab;
  const std::string& exe = pick(rng, kCronBinaries);
  r.exe = exe;
  if (exe == "/usr/sbin/logrotate") {
    r.args = {"/etc/logrotate.conf"};
    r.events.push_back(file_read("/etc/logrotate.conf"));
    r.events.push_back(file_write("/var/log/syslog"));
  } else if (exe == "/usr/bin/find") {
    r.args = {"/var/tmp", "-mtime", "+7"};
    r.events.push_back(syscall("unlink"));
  } else if (exe == "/usr/sbin/cron") {
    r.args = {"-f"};
    r.events.push_back(file_read("/etc/crontab"));
    r.events.push_back({EventKind::kFork, "fork", std::nullopt});
  } else {
    r.events.push_back(file_write("/var/lib/mlocate/mlocate.db"));
  }
  const auto n_sys = rng.between(0, 2);
  for (std::int64_t i = 0; i < n_sys; ++i) {
    r.events.push_back(syscall(pick(rng, kCronSyscalls)));
  }
  if (rng.bernoulli(0.05)) {
    r.netflows.push_back({kDnsServer, 53, Proto::kUdp});
  }
  if (exe == "/usr/sbin/cron") {
    r.parent = ParentLink{1, "/lib/systemd/systemd"};
  } else {
    r.parent = ParentLink{rng.between(300, 65535), "/usr/sbin/cron"};
  }
}

inline void package_manager(Rng& rng, ProcessRecord& r) {
  using namespace synth_vocab;
  const std::string& exe = pick(rng, kPackageBinaries);
  const std::string& pkg = pick(rng, kPackages);
  const std::string archive = "/var/cache/apt/archives/" + pkg + ".deb";
  r.exe = exe;
  if (exe == "/usr/bin/dpkg") {
    r.args = {"-i", archive};
    r.events.push_back(file_read(archive));
    r.events.push_back(file_write("/var/lib/dpkg/status"));
  } else {
    const bool update = rng.bernoulli(0.4);
    r.args = update ? std::vector<std::string>{"update"}
                    : std::vector<std::string>{"install", "-y", pkg};
    r.events.push_back(file_read("/etc/apt/sources.list"));
    r.netflows.push_back({kDnsServer, 53, Proto::kUdp});
    const auto n_flows = rng.between(1, 2);
    for (std::int64_t i = 0; i < n_flows; ++i) {
      r.netflows.push_back(
          {pick(rng, kMirrors), rng.bernoulli(0.5) ? 80 : 443, Proto::kTcp});
    }
    if (!update) {
      r.events.push_back(file_write(archive));
      r.events.push_back({EventKind::kExec, "/usr/bin/dpkg", std::nullopt});
    }
  }
  const auto n_sys = rng.between(1, 2);
  for (std::int64_t i = 0; i < n_sys; ++i) {
    r.events.push_back(syscall(pick(rng, kPackageSyscalls)));
  }
  r.parent = ParentLink{rng.between(300, 65535),
                        rng.bernoulli(0.7) ? "/usr/bin/sudo" : "/bin/bash"};
}

inline ProcessRecord benign_record(Rng& rng, std::string_view profile,
                                   std::int64_t ts) {
  ProcessRecord r;
  r.pid = rng.between(300, 65535);
  r.ts = ts;
  r.label = 0;
  if (profile == "shell_session") {
    shell_session(rng, r);
  } else if (profile == "web_server") {
    web_server(rng, r);
  } else if (profile == "cron_job") {
    cron_job(rng, r);
  } else {
    package_manager(rng, r);
  }
  return r;
}

inline ProcessRecord campaign_record(Rng& rng, const CampaignConfig& c,
                                     std::int64_t ts) {
  using namespace synth_vocab;
  static const std::vector<std::string> kFootholds = {
      "/usr/sbin/nginx", "/usr/sbin/apache2", "/usr/sbin/sshd",
      "/usr/sbin/cron"};
  ProcessRecord r;
  r.pid = rng.between(300, 65535);
  r.ts = ts;
  r.label = 1;
  r.exe = "/bin/bash";
  r.parent = ParentLink{rng.between(300, 65535), pick(rng, kFootholds)};
  r.events.push_back(syscall(pick(rng, kShellSyscalls)));
  for (CampaignStage stage : c.stages) {
    switch (stage) {
      case CampaignStage::kDropperExec: {
        const std::string& dropper = pick(rng, c.rare_binary_pool);
        r.exe = dropper;
        r.args = {pick(rng, kRareArgs)};
        r.events.push_back(file_write(dropper));
        break;
      }
      case CampaignStage::kC2Netflow:
        r.netflows.push_back(
            {pick(rng, c.rare_ip_pool), pick(rng, kC2Ports), Proto::kTcp});
        break;
      case CampaignStage::kCredentialFileWrite:
        r.events.push_back(file_read("/etc/shadow"));
        r.events.push_back(file_write("/etc/passwd"));
        break;
      case CampaignStage::kLateralFork:
        r.events.push_back({EventKind::kFork, "fork", std::nullopt});
        r.events.push_back(
            {EventKind::kExec, pick(rng, c.rare_binary_pool), std::nullopt});
        r.netflows.push_back({pick(rng, c.rare_ip_pool), 22, Proto::kTcp});
        break;
    }
  }
  return r;
}

}  // namespace detail

// Replaces `count` distinct records (chosen by seeded partial shuffle) with
// campaign records labelled 1. Replacements keep the original timestamp.
inline std::vector<ProcessRecord> inject_anomalies(
    std::vector<ProcessRecord> records, const CampaignConfig& campaign,
    std::int64_t count, std::uint64_t seed) {
  if (count < 0 || static_cast<std::size_t>(count) > records.size()) {
    throw Error(Errc::kCountExceedsDataset,
                "cannot inject " + std::to_string(count) + " anomalies into " +
                    std::to_string(records.size()) + " records");
  }
  if (count == 0) return records;
  validate_campaign(campaign);
  Rng rng(seed);
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::int64_t i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   rng.below(order.size() - static_cast<std::size_t>(i));
    std::swap(order[static_cast<std::size_t>(i)], order[j]);
  }
  std::vector<std::size_t> chosen(order.begin(), order.begin() + count);
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t idx : chosen) {
    records[idx] = detail::campaign_record(rng, campaign, records[idx].ts);
  }
  return records;
}

inline std::vector<ProcessRecord> generate_dataset(const SynthConfig& cfg) {
  validate_synth_config(cfg);
  Rng rng(derive_seed(cfg.seed, "benign"));
  std::vector<ProcessRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.n_processes));
  std::int64_t ts = 1'500'000'000'000;
  for (std::int64_t i = 0; i < cfg.n_processes; ++i) {
    ts += rng.between(1, 2000);
    const std::string& profile = detail::pick(rng, cfg.benign_profiles);
    records.push_back(detail::benign_record(rng, profile, ts));
  }
  return inject_anomalies(std::move(records), cfg.campaign, anomaly_count(cfg),
                          derive_seed(cfg.seed, "inject"));
}

// JSON config: {"n_processes", "contamination", "benign_profiles", "seed",
// "campaign": {"stages", "rare_binary_pool", "rare_ip_pool"}}; absent keys
// keep their defaults.
inline CampaignConfig campaign_from_json(const nlohmann::json& j) {
  CampaignConfig c;
  if (j.contains("stages")) {
    c.stages.clear();
    for (const auto& s : j.at("stages")) {
      auto stage = parse_campaign_stage(s.get<std::string>());
      if (!stage) {
        throw Error(Errc::kInvalidConfig,
                    "unknown stage '" + s.get<std::string>() + "'", "stages");
      }
      c.stages.push_back(*stage);
    }
  }
  if (j.contains("rare_binary_pool")) {
    c.rare_binary_pool = j.at("rare_binary_pool").get<std::vector<std::string>>();
  }
  if (j.contains("rare_ip_pool")) {
    c.rare_ip_pool = j.at("rare_ip_pool").get<std::vector<std::string>>();
  }
  return c;
}

inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig cfg;
  try {
    if (j.contains("n_processes")) cfg.n_processes = j.at("n_processes").get<std::int64_t>();
    if (j.contains("contamination")) cfg.contamination = j.at("contamination").get<double>();
    if (j.contains("benign_profiles")) {
      cfg.benign_profiles = j.at("benign_profiles").get<std::vector<std::string>>();
    }
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("campaign")) cfg.campaign = campaign_from_json(j.at("campaign"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidConfig, e.what());
  }
  return cfg;
}

}  // namespace provdetect

#endif  // PROVDETECT_SYNTH_HPP_
