#pragma once

#include <filesystem>
#include <memory>

#include "mlbridge/channel_runner.h"

namespace mlbridge {

/// One FIFO pair. Paths are from this side's point of view: we read from
/// read_path and write to write_path.
struct PipeEndpoints {
  std::filesystem::path read_path;
  std::filesystem::path write_path;

  /// The same pair as seen by the other side.
  PipeEndpoints Mirrored() const { return {write_path, read_path}; }

  bool operator==(const PipeEndpoints&) const = default;
};

/// Named-pipe runner. Opening creates missing FIFOs (mode 0600) and waits up
/// to per_call_timeout for the peer to open its ends. Both FIFO files are
/// removed on Close() or destruction. Either side may open first. If the
/// peer opens, closes and removes the files before this side has finished
/// opening, Open() throws PeerClosed.
class PipeModelRunner final : public ChannelRunner {
 public:
  static std::unique_ptr<PipeModelRunner> Open(const PipeEndpoints& endpoints,
                                               SerDesKind serdes,
                                               RunnerMode mode,
                                               const RetryPolicy& policy = {},
                                               ChannelOptions options = {});
  ~PipeModelRunner() override;

  const PipeEndpoints& endpoints() const noexcept { return endpoints_; }

 protected:
  void OnClosed() override;

 private:
  PipeModelRunner(PipeEndpoints endpoints, SerDesKind serdes, RunnerMode mode,
                  const RetryPolicy& policy, ChannelOptions options);
  void Connect();

  PipeEndpoints endpoints_;
};

inline std::unique_ptr<PipeModelRunner> OpenPipeRunner(
    const PipeEndpoints& endpoints, SerDesKind serdes, RunnerMode mode,
    const RetryPolicy& policy = {}, ChannelOptions options = {}) {
  return PipeModelRunner::Open(endpoints, serdes, mode, policy,
                               std::move(options));
}

}  // namespace mlbridge
