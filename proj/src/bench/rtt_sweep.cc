#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <map>
#include <random>
#include <thread>

#include "mlbridge/bench.h"
#include "mlbridge/child_process.h"
#include "mlbridge/inproc_runner.h"
#include "mlbridge/pipe_runner.h"
#include "mlbridge/rpc_runner.h"

namespace mlbridge {

std::string_view ToString(RunnerKind kind) {
  switch (kind) {
    case RunnerKind::kInProcess:
      return "inproc";
    case RunnerKind::kPipe:
      return "pipe";
    case RunnerKind::kRpc:
      return "rpc";
  }
  return "?";
}

std::optional<RunnerKind> ParseRunnerKind(std::string_view token) {
  if (token == "inproc") return RunnerKind::kInProcess;
  if (token == "pipe") return RunnerKind::kPipe;
  if (token == "rpc") return RunnerKind::kRpc;
  return std::nullopt;
}

void SweepConfig::Validate() const {
  if (min_len < 1) throw RunnerError::Malformed("min_len must be >= 1");
  if (step < 1) throw RunnerError::Malformed("step must be >= 1");
  if (max_len < min_len) throw RunnerError::Malformed("max_len < min_len");
  if (repeats < 1 || repeats % 2 == 0) {
    throw RunnerError::Malformed("repeats must be odd and >= 1");
  }
  if (runner == RunnerKind::kRpc) CheckRpcSerDes(serdes);
}

std::size_t SweepConfig::point_count() const {
  return static_cast<std::size_t>((max_len - min_len) / step + 1);
}

std::string SweepConfig::serdes_label() const {
  return runner == RunnerKind::kInProcess ? "none"
                                          : std::string(ToString(serdes));
}

MlpModel SweepModel(std::int64_t len, std::uint64_t seed) {
  const std::int64_t dims[] = {len, 1};
  return MakeRandomModel(dims, seed * 1000003u + static_cast<std::uint64_t>(len),
                         Activation::kIdentity);
}

BundleHandler MakeEchoHandler() {
  return [](const FeatureBundle& in) { return in; };
}

BundleHandler MakeSweepHandler(std::uint64_t seed) {
  auto cache = std::make_shared<std::map<std::int64_t, MlpModel>>();
  return [cache, seed](const FeatureBundle& in) {
    const auto* obs = in.Find("obs");
    if (obs == nullptr) throw RunnerError::Malformed("missing key 'obs'");
    const auto input = ToFloatVector(*obs);
    const auto len = static_cast<std::int64_t>(input.size());
    auto it = cache->find(len);
    if (it == cache->end()) it = cache->emplace(len, SweepModel(len, seed)).first;
    FeatureBundle out;
    out.Put(TensorValue::Vector<float>("output", it->second.Forward(input)));
    return out;
  };
}

BundleHandler MakeAgentHandler(MlpModel model) {
  auto shared = std::make_shared<const MlpModel>(std::move(model));
  return [shared](const FeatureBundle& in) {
    const auto* obs = in.Find("obs");
    if (obs == nullptr) throw RunnerError::Malformed("missing key 'obs'");
    FeatureBundle out;
    out.Put(TensorValue::Scalar<std::int64_t>(
        "action", AgentAct(*shared, ToFloatVector(*obs))));
    return out;
  };
}

namespace {

using Clock = std::chrono::steady_clock;

std::vector<float> SweepInput(std::int64_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(len) *
                              0x9E3779B97F4A7C15ull));
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> v(static_cast<std::size_t>(len));
  for (auto& x : v) x = dist(rng);
  return v;
}

// Owns the peer serving a pipe or rpc sweep, whether a child process or a
// thread, plus the host runner connected to it.
class RemoteTarget {
 public:
  RemoteTarget(const SweepConfig& config, const SweepPeer& peer) {
    try {
      Start(config, peer);
    } catch (...) {
      Cleanup();
      throw;
    }
  }

  ~RemoteTarget() { Cleanup(); }

  ModelRunner& runner() { return *runner_; }

 private:
  void Start(const SweepConfig& config, const SweepPeer& peer) {
    const RetryPolicy policy{std::chrono::milliseconds(20), 2.0, 8,
                             std::chrono::milliseconds(30000)};
    const bool use_process = !peer.executable.empty();
    if (config.runner == RunnerKind::kPipe) {
      dir_ = peer.scratch_dir;
      if (dir_.empty()) {
        dir_ = std::filesystem::temp_directory_path() /
               ("mlbridge-sweep-" + std::to_string(::getpid()) + "-" +
                std::to_string(Clock::now().time_since_epoch().count()));
        owns_dir_ = true;
      }
      std::filesystem::create_directories(dir_);
      const PipeEndpoints host{dir_ / "model_to_host", dir_ / "host_to_model"};
      const PipeEndpoints side = host.Mirrored();
      if (use_process) {
        child_.emplace(ChildProcess::Spawn(
            peer.executable,
            {"serve", "--runner", "pipe", "--serdes",
             std::string(ToString(config.serdes)), "--read",
             side.read_path.string(), "--write", side.write_path.string(),
             "--handler", "sweep", "--seed", std::to_string(config.seed)}));
      } else {
        StartThread([side, config, policy] {
          auto server = OpenPipeRunner(side, config.serdes,
                                       RunnerMode::kTraining, policy);
          server->Serve(MakeSweepHandler(config.seed));
        });
      }
      runner_ = OpenPipeRunner(host, config.serdes, RunnerMode::kInference,
                               policy);
    } else {
      int port = 0;
      if (use_process) {
        child_.emplace(ChildProcess::Spawn(
            peer.executable,
            {"serve", "--runner", "rpc", "--serdes", "tagged", "--port", "0",
             "--handler", "sweep", "--seed", std::to_string(config.seed)}));
        const std::string line = child_->ReadLine(policy.per_call_timeout);
        if (line.rfind("ready ", 0) != 0) {
          throw RunnerError::Malformed("unexpected peer banner: " + line);
        }
        port = std::stoi(line.substr(6));
      } else {
        auto server = OpenRpcRunner({"127.0.0.1", 0}, config.serdes,
                                    RunnerMode::kTraining, policy);
        port = server->bound_port();
        std::shared_ptr<RpcModelRunner> shared(std::move(server));
        StartThread([shared, config] {
          shared->Serve(MakeSweepHandler(config.seed));
        });
      }
      runner_ = OpenRpcRunner({"127.0.0.1", port}, config.serdes,
                              RunnerMode::kInference, policy);
    }
  }

  void Cleanup() {
    if (runner_) runner_->Close();
    if (child_) child_->Terminate();
    if (thread_.joinable()) thread_.join();
    if (owns_dir_) {
      std::error_code ec;
      std::filesystem::remove_all(dir_, ec);
    }
  }

  template <typename F>
  void StartThread(F body) {
    thread_ = std::thread([body = std::move(body)] {
      try {
        body();
      } catch (...) {
        // The host side sees the failure as a timeout or closed channel.
      }
    });
  }

  std::filesystem::path dir_;
  bool owns_dir_ = false;
  std::optional<ChildProcess> child_;
  std::thread thread_;
  std::unique_ptr<ChannelRunner> runner_;
};

std::int64_t TimedEvaluate(ModelRunner& runner, const TensorValue& request,
                           std::span<const TensorSpec> output_specs,
                           FeatureBundle* reply) {
  runner.PopulateFeature(request);
  const auto t0 = Clock::now();
  auto out = runner.Evaluate(output_specs);
  const auto t1 = Clock::now();
  if (reply != nullptr) *reply = std::move(out);
  const auto ns =
      std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
  return std::max<std::int64_t>(1, (ns + 999) / 1000);
}

}  // namespace

SweepResult RttSweep(const SweepConfig& config, const SweepPeer& peer,
                     std::ostream* csv) {
  config.Validate();
  std::optional<RemoteTarget> remote;
  if (config.runner != RunnerKind::kInProcess) remote.emplace(config, peer);

  const std::vector<TensorSpec> output_specs = {
      {"output", DType::kF32, {1}}};
  if (csv != nullptr) *csv << kCsvHeader << '\n' << std::flush;

  SweepResult result;
  for (std::int64_t len = config.min_len; len <= config.max_len;
       len += config.step) {
    const auto model = SweepModel(len, config.seed);
    const auto input = SweepInput(len, config.seed);
    const auto request = TensorValue::Vector<float>("obs", input);

    std::optional<InProcessRunner> local;
    if (!remote) local.emplace(AgentMap{{"sweep", model}});
    ModelRunner& runner = remote ? remote->runner() : *local;

    // Untimed warm-up round; also checks the peer computed the same model.
    FeatureBundle reply;
    TimedEvaluate(runner, request, output_specs, &reply);
    const auto expected = model.Forward(input);
    const auto got = reply.Get("output", DType::kF32).values<float>();
    if (!std::equal(got.begin(), got.end(), expected.begin(), expected.end())) {
      throw RunnerError::ModelError("peer output differs from local model at "
                                    "length " + std::to_string(len));
    }

    std::vector<std::int64_t> samples;
    for (int r = 0; r < config.repeats; ++r) {
      samples.push_back(TimedEvaluate(runner, request, output_specs, nullptr));
    }
    std::nth_element(samples.begin(), samples.begin() + samples.size() / 2,
                     samples.end());
    RttRecord rec{len, samples[samples.size() / 2],
                  std::string(ToString(config.runner)), config.serdes_label()};
    result.cumulative_micros += rec.rtt_micros;
    if (csv != nullptr) {
      *csv << rec.vector_len << ',' << rec.rtt_micros << ',' << rec.runner
           << ',' << rec.serdes << '\n'
           << std::flush;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

}  // namespace mlbridge
