// Copyright 2026 The MaskPress Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Runs the command-line tool as a subprocess.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& Root() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "mp_cli";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string Quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

RunResult Run(const std::vector<std::string>& args) {
  std::string cmd = Quote(MP_CLI_PATH);
  for (const auto& a : args) cmd += " " + Quote(a);
  const fs::path out = Root() / "stdout.txt", err = Root() / "stderr.txt";
  cmd += " > " + Quote(out.string()) + " 2> " + Quote(err.string());
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = Slurp(out);
  r.err = Slurp(err);
  return r;
}

std::string P(const std::string& name) { return (Root() / name).string(); }

std::vector<json> ReadJsonl(const fs::path& p) {
  std::vector<json> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(json::parse(line));
  }
  return rows;
}

void WriteLines(const fs::path& p, const std::vector<json>& rows) {
  std::ofstream out(p, std::ios::binary);
  for (const auto& r : rows) out << r.dump() << '\n';
}

const char* kDatasetFiles[] = {"train.jsonl", "validation.jsonl", "test.jsonl",
                               "splits.json", "report.json"};

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(Run({"--help"}).code == 0);
  CHECK(Run({}).code == 2);
  CHECK(Run({"synth-corpus"}).code == 2);  // --out is required
  CHECK(Run({"synth-corpus", "--out", P("x"), "--bogus"}).code == 2);
  CHECK(Run({"frobnicate"}).code == 2);
  CHECK(Run({"synth-corpus", "--out", P("tiny_vocab"), "--vocab-size", "4"}).code == 2);
  CHECK(Run({"build-dataset", "--corpus", P("nothing"), "--out", P("o"),
             "--require-beats-full", "0", "--require-beats-fewer", "0"})
            .code != 0);
}

TEST_CASE("synth-corpus is reproducible and loads back") {
  REQUIRE(Run({"-q", "synth-corpus", "--out", P("s7a"), "--seed", "7"}).code == 0);
  REQUIRE(Run({"-q", "synth-corpus", "--out", P("s7b"), "--seed", "7"}).code == 0);
  REQUIRE(Run({"-q", "synth-corpus", "--out", P("s8"), "--seed", "8"}).code == 0);
  for (const char* f : {"corpus.json", "prompts.jsonl", "label_pairs.jsonl"}) {
    CHECK(Slurp(Root() / "s7a" / f) == Slurp(Root() / "s7b" / f));
  }
  CHECK(Slurp(Root() / "s7a" / "prompts.jsonl") != Slurp(Root() / "s8" / "prompts.jsonl"));
  const auto prompts = ReadJsonl(Root() / "s7a" / "prompts.jsonl");
  CHECK(prompts.size() == 20);
  CHECK(prompts[0]["shots"].size() == 32);
  // The dataset builder goes through the corpus loader.
  const RunResult r = Run({"-q", "build-dataset", "--corpus", P("s7a"), "--out", P("s7d")});
  CHECK(r.code == 0);
  const json report = json::parse(Slurp(Root() / "s7d" / "report.json"));
  CHECK(report["improved"].get<int>() + report["not_improved"].get<int>() == 20);
  CHECK(report["n_prompts"] == 20);
  CHECK(report["stage_counts"]["full"] == 20);
}

TEST_CASE("missing artifacts exit 3") {
  CHECK(Run({"build-dataset", "--corpus", P("absent"), "--out", P("o")}).code == 3);
  CHECK(Run({"train", "--train", P("absent.jsonl"), "--out", P("m.bin")}).code == 3);
  CHECK(Run({"compress", "--model", P("absent.bin"), "--text", "a b"}).code == 3);
  CHECK(Run({"analyze", "--pairs", P("absent.jsonl"), "--out", P("a.json")}).code == 3);
}

TEST_CASE("remote oracle failure exits 4") {
  REQUIRE(Run({"-q", "synth-corpus", "--out", P("r"), "--n-prompts", "2", "--n-exemplars",
               "3"})
              .code == 0);
  std::ofstream(Root() / "eval.jsonl") << R"({"question":"1+1?","answer":"2"})" << "\n";
  const std::string cmd = std::string("MASKPRESS_API_BASE=http://127.0.0.1:1 ") +
                          Quote(MP_CLI_PATH) + " -q build-dataset --corpus " +
                          Quote(P("r")) + " --out " + Quote(P("rd")) +
                          " --oracle llm --max-retries 0 --eval-set " +
                          Quote(P("eval.jsonl")) + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 4);
}

TEST_CASE("config file sections, precedence and unknown keys") {
  std::ofstream(Root() / "ok.ini") << "[synth-corpus]\nn-prompts = 3\nseed = 5\n";
  REQUIRE(Run({"-q", "--config", P("ok.ini"), "synth-corpus", "--out", P("ini1")}).code == 0);
  CHECK(ReadJsonl(Root() / "ini1" / "prompts.jsonl").size() == 3);
  REQUIRE(Run({"-q", "synth-corpus", "--out", P("ini2"), "--config", P("ok.ini"),
               "--n-prompts", "4"})
              .code == 0);
  CHECK(ReadJsonl(Root() / "ini2" / "prompts.jsonl").size() == 4);

  const RunResult logged = Run({"--config", P("ok.ini"), "synth-corpus", "--out", P("ini3")});
  CHECK(logged.code == 0);
  CHECK(logged.out.find("seed=5") != std::string::npos);

  std::ofstream(Root() / "bad.ini") << "[synth-corpus]\nn-prompt = 3\n";
  CHECK(Run({"--config", P("bad.ini"), "synth-corpus", "--out", P("ini4")}).code == 2);
  CHECK(Run({"--config", P("none.ini"), "synth-corpus", "--out", P("ini5")}).code != 0);
}

TEST_CASE("build-dataset resumes after SIGINT") {
  REQUIRE(Run({"-q", "synth-corpus", "--out", P("big"), "--n-prompts", "200", "--seed",
               "3"})
              .code == 0);
  const std::vector<std::string> base = {"-q", "build-dataset", "--corpus", P("big"),
                                         "--k", "32"};
  auto with_out = [&base](const std::string& out) {
    std::vector<std::string> a = base;
    a.push_back("--out");
    a.push_back(out);
    return a;
  };
  REQUIRE(Run(with_out(P("big_clean"))).code == 0);

  const fs::path killed = Root() / "big_killed";
  const pid_t pid = fork();
  REQUIRE(pid >= 0);
  if (pid == 0) {
    const int devnull = ::open("/dev/null", O_WRONLY);
    dup2(devnull, 1);
    dup2(devnull, 2);
    std::vector<std::string> args = with_out(killed.string());
    std::vector<char*> argv{const_cast<char*>(MP_CLI_PATH)};
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);
    execv(MP_CLI_PATH, argv.data());
    _exit(127);
  }
  // Wait until a few prompts have search checkpoints, then interrupt.
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
  while (std::chrono::steady_clock::now() < deadline) {
    size_t n = 0;
    if (fs::exists(killed / "ta")) {
      for ([[maybe_unused]] const auto& e : fs::directory_iterator(killed / "ta")) ++n;
    }
    if (n >= 5) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  kill(pid, SIGINT);
  int status = 0;
  waitpid(pid, &status, 0);
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 130);
  CHECK_FALSE(fs::exists(killed / "report.json"));

  REQUIRE(Run(with_out(killed.string())).code == 0);
  for (const char* f : kDatasetFiles) {
    CHECK(Slurp(killed / f) == Slurp(Root() / "big_clean" / f));
  }
}

TEST_CASE("train, compress, grid-search and analyze") {
  REQUIRE(Run({"-q", "synth-corpus", "--out", P("tc"), "--n-prompts", "240", "--n-exemplars",
               "4", "--redundant-per-shot", "4", "--seed", "5"})
              .code == 0);
  const auto labels = ReadJsonl(Root() / "tc" / "label_pairs.jsonl");
  const auto prompts = ReadJsonl(Root() / "tc" / "prompts.jsonl");
  WriteLines(Root() / "tc_train.jsonl", {labels.begin(), labels.begin() + 200});
  WriteLines(Root() / "tc_val.jsonl", {labels.begin() + 200, labels.end()});

  const std::vector<std::string> train = {"-q", "train", "--train", P("tc_train.jsonl"),
                                          "--lr", "3e-3", "--epochs", "10",
                                          "--warmup-steps", "50", "--seed", "1"};
  auto train_to = [&train](const std::string& out) {
    std::vector<std::string> a = train;
    a.push_back("--out");
    a.push_back(out);
    return a;
  };
  REQUIRE(Run(train_to(P("tc.bin"))).code == 0);
  REQUIRE(Run(train_to(P("tc2.bin"))).code == 0);
  CHECK(Slurp(Root() / "tc.bin") == Slurp(Root() / "tc2.bin"));

  // Threshold above any probability keeps every token.
  const std::string text = prompts[200]["text"];
  const RunResult none = Run({"compress", "--model", P("tc.bin"), "--text", text, "--tau", "2"});
  REQUIRE(none.code == 0);
  CHECK(none.out.find("compression ratio: 0.000000") != std::string::npos);

  // Held-out prompts: every essential and query token survives.
  size_t intact = 0;
  double ratio_sum = 0;
  for (size_t i = 200; i < prompts.size(); ++i) {
    const json& p = prompts[i];
    const RunResult r = Run({"-q", "compress", "--model", P("tc.bin"), "--text",
                             p["text"].get<std::string>(), "--tau", "0.1", "--out",
                             P("c.json")});
    REQUIRE(r.code == 0);
    const json res = json::parse(Slurp(Root() / "c.json"));
    const auto mask = res["mask"].get<std::vector<int>>();
    bool ok = res["ratio"].get<double>() > 0;
    for (size_t e : p["essential"].get<std::vector<size_t>>()) ok = ok && mask[e] == 1;
    for (size_t q = p["query"][0]; q < p["query"][1].get<size_t>(); ++q) ok = ok && mask[q] == 1;
    intact += ok;
    ratio_sum += res["ratio"].get<double>();
  }
  CHECK(intact == prompts.size() - 200);
  CHECK(ratio_sum / static_cast<double>(prompts.size() - 200) > 0.15);

  const RunResult grid = Run({"-q", "grid-search", "--model", P("tc.bin"), "--corpus",
                              P("tc"), "--pairs", P("tc_val.jsonl"), "--out", P("g.csv"),
                              "--steps", "16"});
  REQUIRE(grid.code == 0);
  const std::string csv = Slurp(Root() / "g.csv");
  CHECK(csv.rfind("top_k,tau,accuracy,mean_tokens\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);

  REQUIRE(Run({"-q", "analyze", "--pairs", P("tc_val.jsonl"), "--out", P("cats.json")}).code ==
          0);
  const json cats = json::parse(Slurp(Root() / "cats.json"));
  CHECK(cats["tv_distance"].get<double>() >= 0.0);
  CHECK(cats["tv_distance"].get<double>() <= 1.0);
}
