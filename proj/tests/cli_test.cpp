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

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "provdetect/cli.hpp"
#include "temp_dir.hpp"

namespace provdetect {
namespace {

using provdetect::testing::TempDir;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string line(const std::string& text, int n) {
  std::stringstream ss(text);
  std::string l;
  for (int i = 0; i <= n; ++i) std::getline(ss, l);
  return l;
}

struct Outcome {
  int code;
  std::string log;
};

Outcome cli(std::vector<std::string> args) {
  args.insert(args.begin(), "provdetect");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream log;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), log);
  return {code, log.str()};
}

// Runs the installed binary; stderr is captured into a file.
Outcome subprocess(const std::string& args, const std::filesystem::path& err) {
  const std::string cmd = std::string(PROVDETECT_CLI_PATH) + " " + args + " 2>" + err.string() +
                          " >/dev/null";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

std::filesystem::path write_config(const TempDir& tmp) {
  const auto path = tmp / "config.json";
  std::ofstream(path) << R"({
    "seed": 11,
    "datasets": [{"id": "synthetic", "synth": {"n_processes": 500, "contamination": 0.04}}],
    "views": ["PE"],
    "embed": {"backend": "hash", "dim": 64},
    "autoencoder": {"widths": [64, 32, 8, 32, 64], "epochs": 3},
    "baselines": {"n_trees": 20},
    "tsne": {"perplexity": 5, "iterations": 50, "max_points": 30}
  })";
  return path;
}

TEST(Cli, SynthIsByteStable) {
  TempDir tmp;
  const auto cfg = write_config(tmp).string();
  ASSERT_EQ(cli({"synth", "--config", cfg, "--out", (tmp / "a.jsonl").string()}).code, 0);
  ASSERT_EQ(cli({"synth", "--config", cfg, "--out", (tmp / "b.jsonl").string()}).code, 0);
  const std::string a = slurp(tmp / "a.jsonl");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(tmp / "b.jsonl"));
  ASSERT_EQ(cli({"synth", "--config", cfg, "--seed", "12", "--out", (tmp / "c.jsonl").string()})
                .code,
            0);
  EXPECT_NE(a, slurp(tmp / "c.jsonl"));
}

// The staged commands reproduce the pipeline's cell exactly: same seeds,
// same splits, same embeddings.
TEST(Cli, StagedCommandsMatchPipeline) {
  TempDir tmp;
  const auto cfg = write_config(tmp).string();
  const auto p = [&](const char* name) { return (tmp / name).string(); };
  ASSERT_EQ(cli({"synth", "--config", cfg, "--out", p("records.jsonl")}).code, 0);
  ASSERT_EQ(cli({"textualize", "--config", cfg, "--in", p("records.jsonl"), "--view", "PE",
                 "--out", p("corpus.jsonl")})
                .code,
            0);
  ASSERT_EQ(cli({"embed", "--config", cfg, "--in", p("corpus.jsonl"), "--out", p("pe.emb")}).code,
            0);
  ASSERT_EQ(cli({"train", "--config", cfg, "--in", p("records.jsonl"), "--embeddings",
                 p("pe.emb"), "--out", p("ae.model")})
                .code,
            0);
  ASSERT_EQ(cli({"score", "--config", cfg, "--model", p("ae.model"), "--embeddings", p("pe.emb"),
                 "--out", p("scores/MPNet-AE.csv")})
                .code,
            0);
  ASSERT_EQ(cli({"baselines", "--config", cfg, "--in", p("records.jsonl"), "--embeddings",
                 p("pe.emb"), "--out", p("scores")})
                .code,
            0);
  const auto ev = cli({"eval", "--config", cfg, "--in", p("records.jsonl"), "--scores",
                       p("scores/MPNet-AE.csv"), p("scores/IForest.csv"), p("scores/OC-SVM.csv"),
                       p("scores/PCA.csv"), "--out", p("staged")});
  ASSERT_EQ(ev.code, 0) << ev.log;
  ASSERT_EQ(cli({"pipeline", "--config", cfg, "--out", p("full")}).code, 0);

  const std::string staged = slurp(tmp / "staged" / "heatmap.csv");
  EXPECT_EQ(line(staged, 0), "dataset,view,MPNet-AE,IForest,OC-SVM,PCA");
  EXPECT_EQ(staged, slurp(tmp / "full" / "heatmap.csv"));

  const auto ts = cli({"tsne", "--config", cfg, "--in", p("records.jsonl"), "--embeddings",
                       p("pe.emb"), "--out", p("tsne.csv")});
  ASSERT_EQ(ts.code, 0) << ts.log;
  const std::string t = slurp(tmp / "tsne.csv");
  EXPECT_EQ(line(t, 0), "record,x,y,label");
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 31);
}

TEST(Cli, EmbedCacheSurvivesRerun) {
  TempDir tmp;
  const auto cfg = write_config(tmp).string();
  const auto p = [&](const char* name) { return (tmp / name).string(); };
  ASSERT_EQ(cli({"synth", "--config", cfg, "--out", p("r.jsonl")}).code, 0);
  ASSERT_EQ(cli({"textualize", "--config", cfg, "--in", p("r.jsonl"), "--out", p("c.jsonl")}).code,
            0);
  ASSERT_EQ(cli({"embed", "--config", cfg, "--in", p("c.jsonl"), "--out", p("e.emb")}).code, 0);
  const std::string first = slurp(tmp / "e.emb");
  ASSERT_EQ(cli({"embed", "--config", cfg, "--in", p("c.jsonl"), "--out", p("e.emb")}).code, 0);
  EXPECT_EQ(first, slurp(tmp / "e.emb"));
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"synth"}).code, 2);  // --out missing
  EXPECT_EQ(cli({"textualize", "--view", "PQ", "--out", "x"}).code, 2);
  EXPECT_EQ(cli({"embed", "--backend", "grpc"}).code, 2);
}

TEST(Cli, RuntimeErrorsExitOneWithKind) {
  TempDir tmp;
  const auto missing = cli({"train", "--embeddings", (tmp / "none.emb").string(), "--out",
                            (tmp / "m").string()});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.log.find("provdetect: error: "), std::string::npos);

  std::ofstream(tmp / "bad.json") << "{\"views\": []}";
  const auto bad = cli({"synth", "--config", (tmp / "bad.json").string(), "--out",
                        (tmp / "o").string()});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.log.find("InvalidConfig"), std::string::npos);
}

// Reserve an ephemeral port and release it so nothing listens there.
int unused_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

TEST(Binary, RemoteBackendDownExitsOne) {
  TempDir tmp;
  const auto cfg = write_config(tmp).string();
  ASSERT_EQ(cli({"synth", "--config", cfg, "--out", (tmp / "r.jsonl").string()}).code, 0);
  ASSERT_EQ(cli({"textualize", "--config", cfg, "--in", (tmp / "r.jsonl").string(), "--out",
                 (tmp / "c.jsonl").string()})
                .code,
            0);
  ::setenv("PROVDETECT_EMBED_URL", "http://127.0.0.1:9", 1);
  const auto out = subprocess("embed --backend remote --url http://127.0.0.1:" +
                                  std::to_string(unused_port()) + " --in " +
                                  (tmp / "c.jsonl").string() + " --out " +
                                  (tmp / "e.emb").string(),
                              tmp / "err.txt");
  ::unsetenv("PROVDETECT_EMBED_URL");
  EXPECT_EQ(out.code, 1) << out.log;
  EXPECT_NE(out.log.find("BackendUnavailable"), std::string::npos) << out.log;
  EXPECT_FALSE(std::filesystem::exists(tmp / "e.emb"));
}

TEST(Binary, UsageAndHelp) {
  TempDir tmp;
  EXPECT_EQ(subprocess("", tmp / "e1").code, 2);
  EXPECT_EQ(subprocess("pipeline --view XX", tmp / "e2").code, 2);
  EXPECT_EQ(subprocess("--help", tmp / "e3").code, 0);
}

}  // namespace
}  // namespace provdetect
