#include <sstream>

#include "mlbridge/bench.h"
#include "mlbridge/inproc_runner.h"
#include "oracles.h"
#include "test_util.h"

namespace mlbridge {
namespace {

using testing::Lines;
using testing::RunCommand;

const std::string kCli = MLBRIDGE_CLI;

TEST(SweepConfigTest, Validation) {
  SweepConfig c;
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(c.point_count(), 10u);
  EXPECT_EQ(c.serdes_label(), "none");
  auto bad = [](auto mutate) {
    SweepConfig c;
    mutate(c);
    EXPECT_RUNNER_ERROR(c.Validate(), kMalformed);
  };
  bad([](SweepConfig& c) { c.min_len = 0; });
  bad([](SweepConfig& c) { c.step = 0; });
  bad([](SweepConfig& c) { c.repeats = 2; });
  bad([](SweepConfig& c) { c.max_len = 10; });
  bad([](SweepConfig& c) {
    c.runner = RunnerKind::kRpc;
    c.serdes = SerDesKind::kJson;
  });
  c.min_len = 1;
  c.max_len = 10;
  c.step = 4;
  EXPECT_EQ(c.point_count(), 3u);
}

TEST(RunnerKindTest, Tokens) {
  for (auto k : {RunnerKind::kInProcess, RunnerKind::kPipe, RunnerKind::kRpc}) {
    EXPECT_EQ(ParseRunnerKind(ToString(k)), k);
  }
  EXPECT_FALSE(ParseRunnerKind("grpc"));
}

TEST(RttSweepTest, InProcessRecords) {
  SweepConfig c;
  std::ostringstream csv;
  const auto r = RttSweep(c, {}, &csv);
  ASSERT_EQ(r.records.size(), 10u);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    EXPECT_EQ(r.records[i].vector_len, 500 + 500 * static_cast<int>(i));
    EXPECT_GT(r.records[i].rtt_micros, 0);
    EXPECT_EQ(r.records[i].runner, "inproc");
    EXPECT_EQ(r.records[i].serdes, "none");
    total += r.records[i].rtt_micros;
  }
  EXPECT_EQ(total, r.cumulative_micros);
  const auto lines = Lines(csv.str());
  ASSERT_EQ(lines.size(), 11u);
  EXPECT_EQ(lines[0], kCsvHeader);
  EXPECT_EQ(lines[1].rfind("500,", 0), 0u);
}

TEST(RttSweepTest, ThreadPeerTransports) {
  for (auto [runner, serdes] :
       {std::pair{RunnerKind::kPipe, SerDesKind::kJson},
        std::pair{RunnerKind::kPipe, SerDesKind::kBitstream},
        std::pair{RunnerKind::kPipe, SerDesKind::kTaggedBinary},
        std::pair{RunnerKind::kRpc, SerDesKind::kTaggedBinary}}) {
    SweepConfig c;
    c.runner = runner;
    c.serdes = serdes;
    c.max_len = 1500;
    const auto r = RttSweep(c);
    ASSERT_EQ(r.records.size(), 3u);
    EXPECT_EQ(r.records[0].runner, ToString(runner));
    EXPECT_EQ(r.records[0].serdes, ToString(serdes));
  }
}

TEST(SweepModelTest, HandlerMatchesLocalModel) {
  const auto handler = MakeSweepHandler(4);
  FeatureBundle in;
  std::vector<float> x(700, 0.25f);
  in.Put(TensorValue::Vector<float>("obs", x));
  const auto out = handler(in);
  EXPECT_EQ(out.Get("output", DType::kF32),
            TensorValue::Vector<float>("output", SweepModel(700, 4).Forward(x)));
  FeatureBundle as_f64;
  as_f64.Put(TensorValue::Vector<double>("obs", std::vector<double>(700, 0.25)));
  EXPECT_EQ(handler(as_f64), out);
  EXPECT_RUNNER_ERROR(handler(FeatureBundle{}), kMalformed);
}

TEST(CliTest, BenchInprocCsv) {
  const auto r = RunCommand(
      kCli + " bench --runner inproc --min 500 --max 5000 --step 500 "
             "--repeats 3 2>/dev/null");
  EXPECT_EQ(r.exit_code, 0);
  const auto lines = Lines(r.out);
  ASSERT_EQ(lines.size(), 11u);
  EXPECT_EQ(lines[0], "vector_len,rtt_micros,runner,serdes");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    EXPECT_NE(lines[i].find(",inproc,none"), std::string::npos) << lines[i];
  }
}

TEST(CliTest, BenchSpawnedPeers) {
  const auto dir = testing::ScratchDir("cli-bench");
  for (const std::string args :
       {"--runner pipe --serdes json", "--runner pipe", "--runner rpc"}) {
    const auto csv = (dir / "out.csv").string();
    const auto r = RunCommand(kCli + " bench " + args +
                              " --max 1500 --out " + csv + " 2>/dev/null");
    EXPECT_EQ(r.exit_code, 0) << args;
    const auto lines = Lines(RunCommand("cat " + csv).out);
    EXPECT_EQ(lines.size(), 4u) << args;
  }
  std::filesystem::remove_all(dir);
}

TEST(CliTest, RpcRejectsJson) {
  const auto r = RunCommand(kCli + " bench --runner rpc --serdes json 2>&1");
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.out.find("unsupported serdes"), std::string::npos) << r.out;
}

TEST(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(RunCommand(kCli + " 2>/dev/null").exit_code, 2);
  EXPECT_EQ(RunCommand(kCli + " bench --bogus 2>/dev/null").exit_code, 2);
  EXPECT_EQ(RunCommand(kCli + " bench --runner carrier 2>/dev/null").exit_code,
            2);
  const auto r = RunCommand(kCli + " gen-model 2>&1");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.out.find("Usage"), std::string::npos);
}

TEST(CliTest, RunnerErrorExitsOne) {
  const auto r = RunCommand(kCli + " bench --repeats 2 2>&1");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_EQ(r.out.rfind("error: ", 0), 0u) << r.out;
}

std::vector<std::string> TraceLines(const EpisodeTrace& t) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < t.records.size(); ++i) {
    out.push_back("step=" + std::to_string(i) + " agent=" + t.records[i].agent +
                  " obs_len=" + std::to_string(t.records[i].observation_len) +
                  " action=" + std::to_string(t.records[i].action));
  }
  return out;
}

// The CLI adds nothing on top of RunEpisode, whatever runner carries it.
TEST(CliTest, DemoMatchesDirectEpisode) {
  const std::int64_t dims[] = {MockPhaseEnv::kEmbeddingDim, 64, 15};
  MockPhaseEnv env(15, 3, 5);
  const auto expected = TraceLines(
      RunEpisode(env, AgentMap{{"poset", MakeRandomModel(dims, 5)}}, 1000));
  ASSERT_EQ(expected.size(), 3u);
  for (const std::string runner :
       {"inproc", "pipe --serdes json", "pipe --serdes bitstream", "rpc"}) {
    const auto r = RunCommand(kCli + " demo --runner " + runner +
                              " --threshold 3 --seed 5 2>/dev/null");
    EXPECT_EQ(r.exit_code, 0) << runner;
    EXPECT_EQ(Lines(r.out), expected) << runner;
  }
}

TEST(CliTest, GenModelFiles) {
  const auto dir = testing::ScratchDir("cli-gen");
  const auto path = (dir / "m.bin").string();
  ASSERT_EQ(RunCommand(kCli + " gen-model --out " + path +
                       " --input-dim 3 --layers 4,2 --seed 8")
                .exit_code,
            0);
  const std::int64_t dims[] = {3, 4, 2};
  EXPECT_EQ(EncodeModel(LoadModelFile(path)),
            EncodeModel(MakeRandomModel(dims, 8)));

  ASSERT_EQ(RunCommand(kCli + " gen-model --out " + path +
                       " --input-dim 3 --layers 2 --identity")
                .exit_code,
            0);
  const auto id = LoadModelFile(path);
  EXPECT_EQ(id.Forward(std::vector<float>{5, -6, 7}),
            (std::vector<float>{5, -6}));

  // A generated agent drives the demo.
  ASSERT_EQ(RunCommand(kCli + " gen-model --out " + path +
                       " --input-dim 300 --layers 15 --seed 2")
                .exit_code,
            0);
  const auto r = RunCommand(kCli + " demo --threshold 4 --model " + path +
                            " 2>/dev/null");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(Lines(r.out).size(), 4u);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace mlbridge
