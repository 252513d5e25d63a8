// Copyright 2026 The gwsdr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into the captured output.
Run cli(const std::string& args) {
  const std::string cmd = std::string("'") + GWSDR_CLI + "' " + args + " 2>&1";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

struct Scratch {
  fs::path path;
  Scratch() {
    std::string t = (fs::temp_directory_path() / "gwsdr-cli-XXXXXX").string();
    REQUIRE(::mkdtemp(t.data()) != nullptr);
    path = t;
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& n) const { return (path / n).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string config(const std::string& name) {
  return (fs::path(GWSDR_CONFIG_DIR) / name).string();
}

// "a -> b" lines, or "a,b" rows after a header.
std::map<std::string, std::string> pairs(const std::string& text, const std::string& sep,
                                         bool skip_header) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  if (skip_header) std::getline(in, line);
  while (std::getline(in, line)) {
    const auto at = line.find(sep);
    if (at == std::string::npos || line.rfind("warning:", 0) == 0) continue;
    out[line.substr(0, at)] = line.substr(at + sep.size());
  }
  return out;
}

}  // namespace

TEST_CASE("generate is deterministic") {
  Scratch d;
  const std::string args = " --seed 4 --split 0.3";
  REQUIRE(cli("generate --out " + d / "a" + args).code == 0);
  REQUIRE(cli("generate --out " + d / "b" + args).code == 0);
  for (const auto* f : {"source.txt", "target.txt", "target_train.txt", "target_test.txt",
                        "ground_truth.csv"}) {
    CHECK(fs::exists(d / "a/" + f));
    CHECK(slurp(d / "a/" + f) == slurp(d / "b/" + f));
  }
  REQUIRE(cli("generate --out " + d / "c --seed 5").code == 0);
  CHECK(slurp(d / "a/source.txt") != slurp(d / "c/source.txt"));
}

TEST_CASE("usage and validation errors exit 2") {
  Scratch d;
  const auto bad = cli("generate --source-classes 3 --target-classes 5 --out " + d / "x");
  CHECK(bad.code == 2);
  CHECK(bad.out.find("num_source_classes") != std::string::npos);
  CHECK(cli("frobnicate").code == 2);
  CHECK(cli("train --data " + d / "missing.txt --out " + d / "m.model").code == 2);
  CHECK(cli("match --model " + d / "none --source " + d / "none").code == 2);
  CHECK(cli("pipeline --config " + d / "none.conf --out " + d / "o").code == 2);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("train and match reproduce the generator's map") {
  Scratch d;
  REQUIRE(cli("generate --seed 2 --split 0.5 --out " + d.path.string()).code == 0);
  const auto train = cli("train --data " + d / "target_train.txt --test " + d / "target_test.txt" +
                         " --seed 1 --epochs 200 --out " + d / "t.model");
  REQUIRE(train.code == 0);
  CHECK(train.out.rfind("test_accuracy ", 0) == 0);
  const auto base = "match --model " + d / "t.model --source " + d / "source.txt --target " +
                    d / "target.txt --seed 2";
  const auto by_count = cli(base + " --method count --out " + d / "count.csv");
  const auto by_lik = cli(base + " --method likelihood --out " + d / "lik.csv");
  REQUIRE(by_count.code == 0);
  REQUIRE(by_lik.code == 0);
  const auto truth = pairs(slurp(d / "ground_truth.csv"), ",", true);
  REQUIRE(truth.size() == 8);
  CHECK(pairs(by_count.out, " -> ", false) == truth);
  CHECK(pairs(by_lik.out, " -> ", false) == truth);
  CHECK(slurp(d / "count.csv").rfind("target_class,rank,source_class,", 0) == 0);

  // A source of the wrong dimension is a shape error.
  REQUIRE(cli("generate --dim 5 --out " + d / "wide").code == 0);
  const auto wide = cli("match --model " + d / "t.model --source " + d / "wide/source.txt");
  CHECK(wide.code == 2);
  CHECK(wide.out.find("shape mismatch") != std::string::npos);
}

TEST_CASE("an exhausted source exits 3 with partial outputs") {
  Scratch d;
  {
    std::ofstream c(d / "tiny.conf");
    c << "seeds = 1\nhidden = 8\ngenerate.samples_per_source_class = 10\n"
         "augment_budget = 4\niterations = 3\nbaseline.epochs = 5\nsource.epochs = 2\n"
         "retrain.epochs = 5\n";
  }
  const auto r = cli("pipeline --config " + d / "tiny.conf --out " + d / "out");
  CHECK(r.code == 3);
  CHECK(r.out.find("partial results") != std::string::npos);
  CHECK(fs::exists(d / "out/pipeline.json"));
}

TEST_CASE("benchmark runs are byte-stable and pass the checker") {
  Scratch d;
  for (const std::string pass : {"a", "b"})
    REQUIRE(cli("pipeline --config " + config("pipeline.conf") + " --out " + d / pass +
                " --workers 2")
                .code == 0);
  for (const auto* f : {"pipeline.csv", "pipeline.json", "pipeline.config"})
    CHECK(slurp(d / "a/" + f) == slurp(d / "b/" + f));

  const auto out = d / "a";
  REQUIRE(cli("sweep-augment --config " + config("sweep-augment.conf") + " --out " + out).code == 0);
  REQUIRE(cli("sweep-iterate --config " + config("sweep-iterate.conf") + " --out " + out).code == 0);
  const auto check = cli("check --out " + out);
  INFO(check.out);
  CHECK(check.code == 0);
  std::istringstream lines(check.out);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) n += line.rfind("PASS [", 0) == 0;
  CHECK(n == 11);

  // Drop the gws rows at 1x: ordering, random control and determinism must fail.
  std::istringstream csv(slurp(out + "/augment.csv"));
  std::string kept;
  while (std::getline(csv, line))
    if (line.rfind("gws,1,", 0) != 0) kept += line + "\n";
  std::ofstream(out + "/augment.csv", std::ios::binary) << kept;
  const auto tampered = cli("check --out " + out);
  CHECK(tampered.code == 1);
  CHECK(tampered.out.find("FAIL [5]") != std::string::npos);
  CHECK(tampered.out.find("FAIL [7]") != std::string::npos);
  CHECK(tampered.out.find("FAIL [11]") != std::string::npos);
}

TEST_CASE("check on an empty directory names the missing files") {
  Scratch d;
  const auto r = cli("check --out " + d.path.string());
  CHECK(r.code == 1);
  CHECK(r.out.find("augment.csv") != std::string::npos);
  CHECK(r.out.find("pipeline.config") != std::string::npos);
  CHECK(r.out.find("PASS [1]") != std::string::npos);
}
