#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "mlbridge/channel_runner.h"

namespace mlbridge {

struct RpcEndpoint {
  std::string address = "127.0.0.1";
  int port = 0;

  bool operator==(const RpcEndpoint&) const = default;
};

/// Socket runner speaking framed TaggedBinary over TCP.
///
/// Inference mode connects to the endpoint, retrying with the policy's
/// exponential backoff; RetriesExhausted{max_retries + 1} if no attempt
/// succeeds. Training mode binds and listens at construction (port 0 picks
/// an ephemeral port, see bound_port()) and accepts a single peer on the
/// first Serve(), waiting at most per_call_timeout.
class RpcModelRunner final : public ChannelRunner {
 public:
  static std::unique_ptr<RpcModelRunner> Open(const RpcEndpoint& endpoint,
                                              SerDesKind serdes,
                                              RunnerMode mode,
                                              const RetryPolicy& policy = {},
                                              ChannelOptions options = {});
  ~RpcModelRunner() override;

  const RpcEndpoint& endpoint() const noexcept { return endpoint_; }
  /// Listening port in training mode, peer port in inference mode.
  int bound_port() const noexcept { return bound_port_; }

 protected:
  void EnsureConnected() override;
  void OnClosed() override;

 private:
  RpcModelRunner(RpcEndpoint endpoint, SerDesKind serdes, RunnerMode mode,
                 const RetryPolicy& policy, ChannelOptions options);
  void Listen();
  void ConnectWithBackoff();

  RpcEndpoint endpoint_;
  UniqueFd listener_;
  int bound_port_ = 0;
  bool connected_ = false;
};

inline std::unique_ptr<RpcModelRunner> OpenRpcRunner(
    const RpcEndpoint& endpoint, SerDesKind serdes, RunnerMode mode,
    const RetryPolicy& policy = {}, ChannelOptions options = {}) {
  return RpcModelRunner::Open(endpoint, serdes, mode, policy,
                              std::move(options));
}

/// Throws Malformed unless `serdes` can be carried by the socket runner.
void CheckRpcSerDes(SerDesKind serdes);

}  // namespace mlbridge
