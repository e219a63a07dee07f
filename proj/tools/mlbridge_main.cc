// mlbridge: loopback benchmark, demo episode, peer server and model
// generator for the model-runner library.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mlbridge/bench.h"
#include "mlbridge/child_process.h"
#include "mlbridge/inproc_runner.h"
#include "mlbridge/pipe_runner.h"
#include "mlbridge/rpc_runner.h"

namespace {

using namespace mlbridge;

constexpr int kUsageError = 2;

struct CommonOpts {
  std::string runner = "inproc";
  std::string serdes;  // default depends on runner
  std::uint64_t seed = 1;
};

SerDesKind ResolveSerDes(const std::string& token, RunnerKind runner) {
  if (token.empty()) {
    return runner == RunnerKind::kRpc ? SerDesKind::kTaggedBinary
                                      : SerDesKind::kBitstream;
  }
  return *ParseSerDesKind(token);
}

std::filesystem::path SelfExecutable() {
  return std::filesystem::read_symlink("/proc/self/exe");
}

MlpModel DemoModel(const std::string& path, int subsequences,
                   std::uint64_t seed) {
  if (!path.empty()) return LoadModelFile(path);
  const std::int64_t dims[] = {MockPhaseEnv::kEmbeddingDim, 64, subsequences};
  return MakeRandomModel(dims, seed);
}

// ---------------------------------------------------------------------------

struct BenchOpts : CommonOpts {
  std::int64_t min_len = 500;
  std::int64_t max_len = 5000;
  std::int64_t step = 500;
  int repeats = 3;
  std::string out;
  bool thread_peer = false;
};

int RunBench(const BenchOpts& o) {
  SweepConfig config;
  config.runner = *ParseRunnerKind(o.runner);
  config.serdes = ResolveSerDes(o.serdes, config.runner);
  config.min_len = o.min_len;
  config.max_len = o.max_len;
  config.step = o.step;
  config.repeats = o.repeats;
  config.seed = o.seed;
  config.Validate();

  SweepPeer peer;
  if (!o.thread_peer) peer.executable = SelfExecutable();

  std::ofstream file;
  std::ostream* csv = &std::cout;
  if (!o.out.empty()) {
    file.open(o.out, std::ios::trunc);
    if (!file) throw RunnerError::Malformed("cannot open " + o.out);
    csv = &file;
  }
  const auto result = RttSweep(config, peer, csv);
  std::cerr << "cumulative_rtt_micros=" << result.cumulative_micros
            << " runner=" << ToString(config.runner)
            << " serdes=" << config.serdes_label() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct DemoOpts : CommonOpts {
  int threshold = 5;
  int subsequences = 15;
  int max_steps = 1000;
  std::string model;
};

void PrintTrace(const EpisodeTrace& trace) {
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    std::cout << "step=" << i << " agent=" << r.agent
              << " obs_len=" << r.observation_len << " action=" << r.action
              << '\n';
  }
  std::cerr << "terminal=" << (trace.terminal ? "true" : "false")
            << " steps=" << trace.records.size() << '\n';
}

int RunDemo(const DemoOpts& o) {
  const auto kind = *ParseRunnerKind(o.runner);
  MockPhaseEnv env(o.subsequences, o.threshold, o.seed);

  if (kind == RunnerKind::kInProcess) {
    InProcessRunner runner(AgentMap{{"poset", DemoModel(o.model, o.subsequences,
                                                        o.seed)}});
    PrintTrace(runner.RunEpisode(env, o.max_steps));
    return 0;
  }

  const SerDesKind serdes = ResolveSerDes(o.serdes, kind);
  if (kind == RunnerKind::kRpc) CheckRpcSerDes(serdes);
  std::vector<std::string> args = {
      "serve",   "--runner", o.runner, "--serdes", std::string(ToString(serdes)),
      "--handler", "agent", "--seed", std::to_string(o.seed),
      "--subsequences", std::to_string(o.subsequences)};
  if (!o.model.empty()) {
    args.push_back("--model");
    args.push_back(o.model);
  }

  const RetryPolicy policy{std::chrono::milliseconds(20), 2.0, 8,
                           std::chrono::milliseconds(30000)};
  std::unique_ptr<ChannelRunner> runner;
  std::filesystem::path dir;
  std::optional<ChildProcess> child;
  if (kind == RunnerKind::kPipe) {
    dir = std::filesystem::temp_directory_path() /
          ("mlbridge-demo-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    const PipeEndpoints host{dir / "model_to_host", dir / "host_to_model"};
    args.insert(args.end(), {"--read", host.write_path.string(), "--write",
                             host.read_path.string()});
    child.emplace(ChildProcess::Spawn(SelfExecutable(), args));
    runner = OpenPipeRunner(host, serdes, RunnerMode::kInference, policy);
  } else {
    args.insert(args.end(), {"--port", "0"});
    child.emplace(ChildProcess::Spawn(SelfExecutable(), args));
    const std::string line = child->ReadLine(policy.per_call_timeout);
    if (line.rfind("ready ", 0) != 0) {
      throw RunnerError::Malformed("unexpected peer banner: " + line);
    }
    runner = OpenRpcRunner({"127.0.0.1", std::stoi(line.substr(6))}, serdes,
                           RunnerMode::kInference, policy);
  }

  const auto trace = RunEpisode(
      env,
      [&](const std::string&, std::span<const float> obs) {
        runner->PopulateFeature(TensorValue::Vector<float>(
            "obs", std::vector<float>(obs.begin(), obs.end())));
        return runner->EvaluateScalar<std::int64_t>("action");
      },
      o.max_steps);
  runner->Close();
  child->Wait();
  if (!dir.empty()) {
    std::error_code ec;
    std::filesystem::remove_all(dir, ec);
  }
  PrintTrace(trace);
  return 0;
}

// ---------------------------------------------------------------------------

struct ServeOpts : CommonOpts {
  std::string read_path;
  std::string write_path;
  std::string address = "127.0.0.1";
  int port = 0;
  std::string handler = "echo";
  std::string model;
  int subsequences = 15;
  int timeout_ms = 30000;
};

int RunServe(const ServeOpts& o) {
  const auto kind = *ParseRunnerKind(o.runner);
  const SerDesKind serdes = ResolveSerDes(o.serdes, kind);

  BundleHandler handler;
  if (o.handler == "echo") {
    handler = MakeEchoHandler();
  } else if (o.handler == "sweep") {
    handler = MakeSweepHandler(o.seed);
  } else {
    handler = MakeAgentHandler(DemoModel(o.model, o.subsequences, o.seed));
  }

  RetryPolicy policy;
  policy.per_call_timeout = std::chrono::milliseconds(o.timeout_ms);
  std::unique_ptr<ChannelRunner> server;
  if (kind == RunnerKind::kPipe) {
    if (o.read_path.empty() || o.write_path.empty()) {
      throw RunnerError::Malformed("pipe serving needs --read and --write");
    }
    std::cout << "ready" << std::endl;
    server = OpenPipeRunner({o.read_path, o.write_path}, serdes,
                            RunnerMode::kTraining, policy);
  } else if (kind == RunnerKind::kRpc) {
    auto rpc = OpenRpcRunner({o.address, o.port}, serdes,
                             RunnerMode::kTraining, policy);
    std::cout << "ready " << rpc->bound_port() << std::endl;
    server = std::move(rpc);
  } else {
    throw RunnerError::Malformed("serve needs --runner pipe or rpc");
  }
  server->Serve(handler);
  server->Close();
  return 0;
}

// ---------------------------------------------------------------------------

struct GenModelOpts {
  std::string out;
  std::int64_t input_dim = 300;
  std::vector<std::int64_t> layers = {15};
  std::uint64_t seed = 1;
  bool identity = false;
  std::string activation = "relu";
};

int RunGenModel(const GenModelOpts& o) {
  std::vector<std::int64_t> dims = {o.input_dim};
  dims.insert(dims.end(), o.layers.begin(), o.layers.end());
  const Activation hidden =
      o.activation == "identity" ? Activation::kIdentity : Activation::kRelu;
  if (!o.identity) {
    SaveModelFile(MakeRandomModel(dims, o.seed, hidden), o.out);
    return 0;
  }
  std::vector<DenseLayer> layers;
  for (std::size_t i = 1; i < dims.size(); ++i) {
    DenseLayer l;
    l.cols = dims[i - 1];
    l.rows = dims[i];
    l.activation = i + 1 == dims.size() ? Activation::kIdentity : hidden;
    l.weights.assign(static_cast<std::size_t>(l.rows * l.cols), 0.0f);
    for (std::int64_t r = 0; r < std::min(l.rows, l.cols); ++r) {
      l.weights[static_cast<std::size_t>(r * l.cols + r)] = 1.0f;
    }
    l.bias.assign(static_cast<std::size_t>(l.rows), 0.0f);
    layers.push_back(std::move(l));
  }
  SaveModelFile(MlpModel(o.input_dim, std::move(layers)), o.out);
  return 0;
}

void AddCommon(CLI::App* cmd, CommonOpts& o, bool with_inproc) {
  const std::vector<std::string> runners =
      with_inproc ? std::vector<std::string>{"inproc", "pipe", "rpc"}
                  : std::vector<std::string>{"pipe", "rpc"};
  if (!with_inproc) o.runner = "pipe";
  cmd->add_option("--runner", o.runner, "Model runner")
      ->check(CLI::IsMember(runners));
  cmd->add_option("--serdes", o.serdes,
                  "Serialization (default: bitstream, tagged for rpc)")
      ->check(CLI::IsMember({"json", "bitstream", "tagged"}));
  cmd->add_option("--seed", o.seed, "Seed for inputs and generated models");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ML model runner bridge: benchmarks and loopback tools"};
  app.require_subcommand(1);

  BenchOpts bench;
  auto* bench_cmd = app.add_subcommand("bench", "Round-trip-time sweep, CSV out");
  AddCommon(bench_cmd, bench, true);
  bench_cmd->add_option("--min", bench.min_len, "Shortest vector")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--max", bench.max_len, "Longest vector");
  bench_cmd->add_option("--step", bench.step, "Length increment")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--repeats", bench.repeats, "Odd repeat count (median)");
  bench_cmd->add_option("--out", bench.out, "CSV path (default stdout)");
  bench_cmd->add_flag("--thread-peer", bench.thread_peer,
                      "Serve from a thread instead of a child process");

  DemoOpts demo;
  auto* demo_cmd =
      app.add_subcommand("demo", "Run a mock phase-ordering episode");
  AddCommon(demo_cmd, demo, true);
  demo_cmd->add_option("--threshold", demo.threshold, "Steps per episode");
  demo_cmd->add_option("--subsequences", demo.subsequences, "Action count");
  demo_cmd->add_option("--max-steps", demo.max_steps, "Step bound");
  demo_cmd->add_option("--model", demo.model, "Agent model file");

  ServeOpts serve;
  auto* serve_cmd =
      app.add_subcommand("serve", "Serve one session as the model side");
  AddCommon(serve_cmd, serve, false);
  serve_cmd->add_option("--read", serve.read_path, "FIFO to read requests");
  serve_cmd->add_option("--write", serve.write_path, "FIFO to write replies");
  serve_cmd->add_option("--address", serve.address, "Listen address");
  serve_cmd->add_option("--port", serve.port, "Listen port (0 = ephemeral)");
  serve_cmd->add_option("--handler", serve.handler, "Reply handler")
      ->check(CLI::IsMember({"echo", "sweep", "agent"}));
  serve_cmd->add_option("--model", serve.model, "Agent model file");
  serve_cmd->add_option("--subsequences", serve.subsequences,
                        "Action count of the generated agent");
  serve_cmd->add_option("--timeout-ms", serve.timeout_ms,
                        "Wait for the peer to connect");

  GenModelOpts gen;
  auto* gen_cmd = app.add_subcommand("gen-model", "Write a model file");
  gen_cmd->add_option("--out", gen.out, "Output path")->required();
  gen_cmd->add_option("--input-dim", gen.input_dim, "Input width")
      ->check(CLI::PositiveNumber);
  gen_cmd->add_option("--layers", gen.layers, "Layer widths, e.g. 64,15")
      ->delimiter(',');
  gen_cmd->add_option("--seed", gen.seed, "Weight seed");
  gen_cmd->add_flag("--identity", gen.identity,
                    "Identity weights, zero bias");
  gen_cmd->add_option("--activation", gen.activation, "Hidden activation")
      ->check(CLI::IsMember({"relu", "identity"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n' << app.help();
    return kUsageError;
  }

  try {
    if (*bench_cmd) return RunBench(bench);
    if (*demo_cmd) return RunDemo(demo);
    if (*serve_cmd) return RunServe(serve);
    if (*gen_cmd) return RunGenModel(gen);
  } catch (const RunnerError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kUsageError;
}
