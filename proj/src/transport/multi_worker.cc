#include "mlbridge/multi_worker.h"

#include <future>
#include <set>
#include <string>

namespace mlbridge {
namespace {

template <typename Endpoint, typename OpenFn>
std::vector<WorkerChannel> OpenAll(std::span<const Endpoint> endpoints,
                                   OpenFn open) {
  std::vector<std::future<std::unique_ptr<ChannelRunner>>> pending;
  pending.reserve(endpoints.size());
  for (const auto& ep : endpoints) {
    pending.push_back(std::async(std::launch::async, [&open, ep] {
      return std::unique_ptr<ChannelRunner>(open(ep));
    }));
  }
  std::vector<WorkerChannel> out(endpoints.size());
  for (std::size_t i = 0; i < pending.size(); ++i) {
    try {
      out[i].runner = pending[i].get();
    } catch (const RunnerError& e) {
      out[i].error = e;
    }
  }
  return out;
}

}  // namespace

std::vector<WorkerChannel> OpenMultiWorker(std::span<const RpcEndpoint> endpoints,
                                           SerDesKind serdes, RunnerMode mode,
                                           const RetryPolicy& policy) {
  CheckRpcSerDes(serdes);
  // Ports identify worker channels; 0 (ephemeral, listeners only) may
  // repeat.
  std::set<int> ports;
  for (const auto& ep : endpoints) {
    if (ep.port != 0 && !ports.insert(ep.port).second) {
      throw RunnerError::Malformed("duplicate port " + std::to_string(ep.port));
    }
  }
  return OpenAll(endpoints, [&](const RpcEndpoint& ep) {
    return OpenRpcRunner(ep, serdes, mode, policy);
  });
}

std::vector<WorkerChannel> OpenMultiWorker(
    std::span<const PipeEndpoints> endpoints, SerDesKind serdes,
    RunnerMode mode, const RetryPolicy& policy) {
  std::set<std::filesystem::path> paths;
  for (const auto& ep : endpoints) {
    if (!paths.insert(ep.read_path).second ||
        !paths.insert(ep.write_path).second) {
      throw RunnerError::Malformed("pipe path shared between workers");
    }
  }
  return OpenAll(endpoints, [&](const PipeEndpoints& ep) {
    return OpenPipeRunner(ep, serdes, mode, policy);
  });
}

}  // namespace mlbridge
