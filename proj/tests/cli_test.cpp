// Copyright 2026 The bpexplain Authors. All Rights Reserved.
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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bpx/service.hpp"

namespace bpx {
namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out;
};

Run bpx_cli(const std::string& args) {
  const std::string cmd = std::string(BPX_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kData = BPX_TEST_DATA;
const std::string kXyz = "--edges " + kData + "/xyz/edges.tsv --priors " + kData +
                          "/xyz/priors.tsv --homophily 0.99";

struct Cli : ::testing::Test {
  fs::path dir;
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("bpx_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

TEST_F(Cli, InferXyz) {
  auto r = bpx_cli("infer " + kXyz);
  ASSERT_EQ(r.code, 0);
  auto j = Json::parse(r.out);
  EXPECT_NEAR(j["nodes"][0]["belief"][0].get<double>(), 0.3182, 1e-4);
  EXPECT_NEAR(j["nodes"][0]["belief"][1].get<double>(), 0.6818, 1e-4);
}

TEST_F(Cli, InferSingleNodeEchoesPrior) {
  std::ofstream(path("e.tsv")) << "# no edges\n";
  std::ofstream(path("p.tsv")) << "4\t0.2\t0.3\t0.5\n";
  auto r = bpx_cli("infer --edges " + path("e.tsv") + " --priors " + path("p.tsv") + " --classes 3 --out " +
                   path("b.json"));
  ASSERT_EQ(r.code, 0);
  auto j = Json::parse(slurp(path("b.json")));
  ASSERT_EQ(j["nodes"].size(), 1u);
  EXPECT_EQ(j["nodes"][0]["belief"], Json({0.2, 0.3, 0.5}));
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(bpx_cli("infer").code, 1);
  EXPECT_EQ(bpx_cli("infer --edges " + path("missing.tsv")).code, 1);
  EXPECT_EQ(bpx_cli("infer --preset karate --bogus").code, 1);
  EXPECT_EQ(bpx_cli("").code, 1);
  EXPECT_EQ(bpx_cli("infer --preset karate infer").code, 1);
  std::ofstream(path("bad.tsv")) << "0\t1\n2\n";
  EXPECT_EQ(bpx_cli("infer --edges " + path("bad.tsv")).code, 2);
  EXPECT_EQ(bpx_cli("explain --preset karate --target 99").code, 2);
  EXPECT_EQ(bpx_cli("explain --preset karate --target 1 --prune 1.5").code, 2);
  EXPECT_EQ(bpx_cli("infer --preset karate --max-iters 1").code, 4);
  EXPECT_EQ(bpx_cli("--version").code, 0);
}

TEST_F(Cli, ExplainXyzExactTree) {
  auto r = bpx_cli("explain " + kXyz + " --target 0 --capacity 3 --beam 1 --out " + path("x"));
  ASSERT_EQ(r.code, 0);
  EXPECT_TRUE(fs::exists(path("x/candidate-1.json")));
  EXPECT_FALSE(fs::exists(path("x/candidate-2.json")));
  auto doc = Json::parse(slurp(path("x/candidate-1.json")));
  EXPECT_NEAR(doc["objective"].get<double>(), 0.0, 1e-9);
  EXPECT_EQ(doc["size"], 3);
  EXPECT_TRUE(doc["is_tree"].get<bool>());
}

TEST_F(Cli, ExplainCapacityOne) {
  auto r = bpx_cli("explain " + kXyz + " --target 0 --capacity 1");
  ASSERT_EQ(r.code, 0);
  auto j = Json::parse(r.out);
  ASSERT_EQ(j["documents"].size(), 1u);
  EXPECT_EQ(j["documents"][0]["nodes"], Json({0}));
}

TEST_F(Cli, ExplainKarateBeam) {
  auto r = bpx_cli("explain --preset karate --target 12 --beam 3 --comb");
  ASSERT_EQ(r.code, 0);
  auto docs = Json::parse(r.out)["documents"];
  ASSERT_GE(docs.size(), 2u);
  ASSERT_LE(docs.size(), 4u);
  EXPECT_EQ(docs.back()["method"], "comb");
  for (std::size_t i = 1; i + 1 < docs.size(); ++i) {
    EXPECT_LE(docs[i - 1]["objective"].get<double>(), docs[i]["objective"].get<double>());
  }
}

TEST_F(Cli, ServiceDocumentsMatchCliBytes) {
  ASSERT_EQ(bpx_cli("explain --preset karate --target 12 --capacity 4 --beam 3 --comb --seed 5 --out " +
                    path("x"))
                .code,
            0);
  ExplainService service;
  auto created = service.handle({"POST", "/api/session", {}, R"({"preset": "karate"})"});
  const auto sid = Json::parse(created.body)["session"].get<std::string>();
  auto r = service.handle({"POST", "/api/" + sid + "/explain", {}, R"({"target": 12, "C": 4, "k": 3, "seed": 5})"});
  ASSERT_EQ(r.status, 200);
  auto j = Json::parse(r.body);
  for (std::size_t i = 0; i < j["candidates"].size(); ++i) {
    EXPECT_EQ(dump_document(j["candidates"][i]["document"]),
              slurp(path("x/candidate-" + std::to_string(i + 1) + ".json")));
  }
  EXPECT_EQ(dump_document(j["comb"]), slurp(path("x/comb.json")));
}

TEST_F(Cli, BatchRatioCoversEveryUnlabelledNode) {
  {
    std::ofstream e(path("e.tsv"));
    for (int i = 1; i < 10; ++i) e << i - 1 << "\t" << i << "\n";
  }
  auto r = bpx_cli("batch --edges " + path("e.tsv") + " --ratio 1.0 --capacity 3");
  ASSERT_EQ(r.code, 0);
  auto j = Json::parse(r.out);
  EXPECT_EQ(j["per_target"].size(), 10u);
  EXPECT_EQ(j["aggregate"]["targets"], 10);
}

TEST_F(Cli, BatchSamplingAndWorkersAreDeterministic) {
  const std::string base = "batch --preset karate --labeled-ratio 0.2 --ratio 0.5 --capacity 4 --seed 4";
  auto a = bpx_cli(base + " --workers 1");
  auto b = bpx_cli(base + " --workers 1");
  auto c = bpx_cli(base + " --workers 3");
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  auto ja = Json::parse(a.out), jc = Json::parse(c.out);
  EXPECT_EQ(ja["per_target"], jc["per_target"]);
  // 0.2 of 34 labels revealed -> 7, half of the 27 others sampled -> 14
  EXPECT_EQ(ja["per_target"].size(), 14u);
}

TEST_F(Cli, BatchTargetsFileRecordsBadTargets) {
  std::ofstream(path("t.txt")) << "0\n# comment\n77\n33\n";
  auto r = bpx_cli("batch --preset karate --targets " + path("t.txt") + " --timings");
  ASSERT_EQ(r.code, 0);
  auto j = Json::parse(r.out);
  ASSERT_EQ(j["per_target"].size(), 3u);
  EXPECT_TRUE(j["per_target"][1].contains("error"));
  EXPECT_TRUE(j["per_target"][0].contains("wall_time"));
  EXPECT_EQ(bpx_cli("batch --preset karate").code, 1);
}

TEST_F(Cli, EvalTable) {
  auto r = bpx_cli("eval --preset karate --labeled-ratio 0.5 --capacity 4 --methods 'GE-G(k=1),Comb'");
  ASSERT_EQ(r.code, 0);
  std::istringstream lines(r.out);
  std::string header, row1, row2;
  std::getline(lines, header);
  std::getline(lines, row1);
  std::getline(lines, row2);
  EXPECT_EQ(row1.rfind("GE-G(k=1)", 0), 0u) << r.out;
  EXPECT_EQ(row2.rfind("Comb", 0), 0u) << r.out;
  EXPECT_NE(row2.find('['), std::string::npos);
  EXPECT_EQ(bpx_cli("eval --preset karate --methods LIME").code, 2);
}

}  // namespace
}  // namespace bpx
