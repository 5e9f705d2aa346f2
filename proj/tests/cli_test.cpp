// Copyright 2026 The ISACL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "isacl/byte_io.hpp"
#include "isacl/judge.hpp"
#include "isacl/synthetic.hpp"
#include "isacl/triplets.hpp"
#include "json.hpp"
#include "test_util.hpp"

namespace isacl::cli {
namespace {

using nlohmann::json;

struct Result {
  int code;
  std::string out, err;
};

Result Invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

// Sets an environment variable for the lifetime of the object.
class ScopedEnv {
 public:
  ScopedEnv(const char* name, const std::string& value) : name_(name) {
    ::setenv(name, value.c_str(), 1);
  }
  ~ScopedEnv() { ::unsetenv(name_); }

 private:
  const char* name_;
};

TEST(CliTest, SuggestsNearbySubcommands) {
  EXPECT_EQ(suggest("lable", {"label", "train", "score"}), "label");
  EXPECT_EQ(suggest("xyzzy", {"label", "train"}), "");
  const auto r = Invoke({"lable"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("did you mean 'label'?"), std::string::npos) << r.err;
}

TEST(CliTest, HelpAndUsageErrors) {
  const auto help = Invoke({"--help"});
  EXPECT_EQ(help.code, kExitOk);
  EXPECT_NE((help.out + help.err).find("build-db"), std::string::npos);
  EXPECT_EQ(Invoke({}).code, kExitUsage);
  EXPECT_EQ(Invoke({"train", "--epochs", "many"}).code, kExitUsage);
  const auto missing = Invoke({"train", "--out", "m.bin"});
  EXPECT_EQ(missing.code, kExitUsage);
  EXPECT_NE(missing.err.find("--data"), std::string::npos) << missing.err;
}

TEST(CliTest, DataProblemsExitWithTwo) {
  testing::TempDir dir;
  EXPECT_EQ(Invoke({"score", "--in", (dir / "absent.jsonl").string()}).code, kExitData);
  write_file_bytes(dir / "bad.jsonl", "{\"id\": 1\n");
  EXPECT_EQ(Invoke({"score", "--in", (dir / "bad.jsonl").string()}).code, kExitData);
}

class CliPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    SyntheticSpec spec;
    spec.dim = 8;
    spec.count = 200;
    spec.seed = 3;
    const auto corpus = gen_text_corpus(spec, 6);
    write_triplets(path("triplets.jsonl"), corpus.triplets);
    std::string pairs;
    for (const auto& t : corpus.triplets) {
      pairs += json{{"id", t.id}, {"input", t.input}, {"reference", t.reference}}.dump();
      pairs += "\n";
    }
    write_file_bytes(path("pairs.jsonl"), pairs);
    write_state_file(corpus.states.header, corpus.states.records, path("states.bin"));
    write_state_file(corpus.embeddings.header, corpus.embeddings.records,
                     path("emb.bin"));
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  testing::TempDir dir_;
};

TEST_F(CliPipeline, ScoreLabelTrainEvalEndToEnd) {
  auto r = Invoke({"score", "--in", path("triplets.jsonl"), "--out", path("scored.jsonl")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  r = Invoke({"label", "--triplets", path("scored.jsonl"), "--states", path("states.bin"),
           "--p", "0.3", "--out", path("labeled.bin"), "--train-fraction", "0.8",
           "--train-out", path("train.bin"), "--test-out", path("test.bin")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto manifest = json::parse(read_file_bytes(path("labeled.bin.manifest.json")));
  EXPECT_EQ(manifest.at("leak").get<int>(), 60);
  EXPECT_EQ(manifest.at("non_disclosure").get<int>(), 60);
  EXPECT_EQ(manifest.at("discarded").get<int>(), 80);

  r = Invoke({"train", "--data", path("train.bin"), "--out", path("model.bin"),
           "--epochs", "40", "--hidden", "32"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  r = Invoke({"eval", "--model", path("model.bin"), "--data", path("test.bin"),
           "--manifest", path("labeled.bin.manifest.json"), "--out", "-"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_DOUBLE_EQ(report.at("division_p").get<double>(), 0.3);
  EXPECT_GE(report.at("accuracy").get<double>(), 0.75);

  r = Invoke({"predict", "--model", path("model.bin"), "--states", path("test.bin"),
           "--out", "-"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto j = json::parse(line);
    EXPECT_EQ(j.at("decision").get<int>(), j.at("probability").get<double>() >= 0.5);
    ++n;
  }
  EXPECT_EQ(n, 24);
}

TEST_F(CliPipeline, BuildAndQueryDatabase) {
  auto r = Invoke({"build-db", "--pairs", path("pairs.jsonl"), "--embeddings",
                path("emb.bin"), "--out", path("refdb.bin")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto emb = read_state_file(path("emb.bin"));
  for (std::size_t i : {0u, 57u, 199u}) {
    r = Invoke({"query-db", "--refdb", path("refdb.bin"), "--states", path("emb.bin"),
             "--id", emb.records[i].id});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(json::parse(r.out).at("id"), emb.records[i].id);
  }
  r = Invoke({"query-db", "--refdb", path("refdb.bin"), "--vector", "1,0,0,0,0,0",
           "--top", "3"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(json::parse(r.out).size(), 3u);
  EXPECT_EQ(Invoke({"query-db", "--refdb", path("refdb.bin"), "--vector", "1,0"}).code,
            kExitData);
}

TEST_F(CliPipeline, FlagsBeatEnvironmentBeatConfig) {
  ASSERT_EQ(Invoke({"score", "--in", path("triplets.jsonl"), "--out", path("scored.jsonl")}).code, 0);
  ASSERT_EQ(Invoke({"label", "--triplets", path("scored.jsonl"), "--states",
                 path("states.bin"), "--out", path("labeled.bin")}).code, 0);
  write_file_bytes(path("cfg.json"),
                   R"({"train": {"epochs": 5, "hidden": 8}, "batch_size": 16})");
  auto epochs_logged = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = {"train", "--config", path("cfg.json"), "--data",
                                     path("labeled.bin"), "--out", path("m.bin"),
                                     "--log", path("log.json")};
    args.insert(args.end(), extra.begin(), extra.end());
    const auto r = Invoke(args);
    EXPECT_EQ(r.code, kExitOk) << r.err;
    const auto log = json::parse(read_file_bytes(path("log.json")));
    return std::make_pair(log.at("epoch_loss").size(), log.at("steps").get<int>());
  };
  // 80 labeled rows, batch 16 from the top-level config key: 5 steps per epoch.
  EXPECT_EQ(epochs_logged({}), std::make_pair(std::size_t{5}, 25));
  {
    ScopedEnv env("ISACL_EPOCHS", "3");
    EXPECT_EQ(epochs_logged({}).first, 3u);
    EXPECT_EQ(epochs_logged({"--epochs", "2"}).first, 2u);
  }
  {
    ScopedEnv cfg("ISACL_CONFIG", path("cfg.json"));
    const auto r = Invoke({"train", "--data", path("labeled.bin"), "--out", path("m.bin"),
                        "--log", path("log.json")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(json::parse(read_file_bytes(path("log.json"))).at("epoch_loss").size(), 5u);
  }
  {
    ScopedEnv data("ISACL_DATA", path("labeled.bin"));
    ScopedEnv out("ISACL_OUT", path("m2.bin"));
    const auto r = Invoke({"train", "--epochs", "1", "--hidden", "4"});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(load_model(path("m2.bin")).net.hidden_dim(), 4u);
  }
}

TEST_F(CliPipeline, SweepWritesTable) {
  ASSERT_EQ(Invoke({"score", "--in", path("triplets.jsonl"), "--out", path("scored.jsonl")}).code, 0);
  const auto r = Invoke({"sweep", "--axis", "division-p", "--values", "0.1,0.3",
                      "--states", path("states.bin"), "--triplets", path("scored.jsonl"),
                      "--epochs", "5", "--hidden", "8", "--out", "-"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(json::parse(r.out).at("rows").size(), 2u);
  EXPECT_NE(r.err.find("IS-w/oRAG"), std::string::npos);
  EXPECT_EQ(Invoke({"sweep", "--axis", "layer", "--values", "1", "--states-template",
                 path("layer.bin"), "--triplets", path("scored.jsonl")})
                .code,
            kExitUsage);
}

}  // namespace
}  // namespace isacl::cli
