#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mlbridge/pipe_runner.h"
#include "mlbridge/rpc_runner.h"

namespace mlbridge {

/// One channel of a multi-worker set: either an open runner or the error
/// that prevented opening it.
struct WorkerChannel {
  std::unique_ptr<ChannelRunner> runner;
  std::optional<RunnerError> error;

  bool ok() const noexcept { return runner != nullptr; }
};

/// Opens one independent runner per endpoint, concurrently. Endpoints must
/// be pairwise distinct (Malformed otherwise). A failure on one endpoint is
/// recorded in its slot and does not affect the others. Results are in
/// endpoint order.
std::vector<WorkerChannel> OpenMultiWorker(std::span<const RpcEndpoint> endpoints,
                                           SerDesKind serdes, RunnerMode mode,
                                           const RetryPolicy& policy = {});

std::vector<WorkerChannel> OpenMultiWorker(
    std::span<const PipeEndpoints> endpoints, SerDesKind serdes,
    RunnerMode mode, const RetryPolicy& policy = {});

}  // namespace mlbridge
