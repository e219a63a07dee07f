#pragma once

#include <cstddef>
#include <functional>
#include <string_view>

#include "mlbridge/frame.h"
#include "mlbridge/model_runner.h"
#include "mlbridge/retry_policy.h"
#include "mlbridge/serdes.h"

namespace mlbridge {

/// Which side initiates requests.
///  - kTraining: the host serves; the model side sends queries.
///  - kInference: the host queries; the model side serves.
enum class RunnerMode { kTraining, kInference };

std::string_view ToString(RunnerMode mode);

using BundleHandler = std::function<FeatureBundle(const FeatureBundle&)>;

struct ChannelOptions {
  std::size_t max_frame_bytes = kDefaultMaxFrameBytes;
  /// Invoked before every connection attempt (0-based). For diagnostics.
  std::function<void(int attempt)> on_connect_attempt;
};

/// Model runner over a framed byte channel. One request frame and one reply
/// frame per round, strictly alternating.
///
/// In inference mode Evaluate() sends the staged bundle and waits up to
/// per_call_timeout for the reply. In training mode Serve() answers peer
/// queries until the peer closes or sends an empty frame.
class ChannelRunner : public ModelRunner {
 public:
  ~ChannelRunner() override;

  RunnerMode mode() const noexcept { return mode_; }
  SerDesKind serdes() const noexcept { return serdes_; }
  const RetryPolicy& policy() const noexcept { return policy_; }

  /// Training mode only. Handler exceptions are answered with a bundle
  /// holding a single kErrorKey string. Returns when the session ends.
  /// `request_specs` is passed to the decoder (needed to type Json numbers).
  void Serve(const BundleHandler& handler,
             const ExpectedSpecs& request_specs = std::nullopt);

  /// Inference mode sends the empty sentinel frame first. Idempotent.
  void Close() override;

 protected:
  ChannelRunner(SerDesKind serdes, RunnerMode mode, RetryPolicy policy,
                ChannelOptions options);

  FeatureBundle EvaluateUntyped(
      const FeatureBundle& input,
      std::span<const TensorSpec> output_specs) override;

  /// Establishes the channel if the transport defers it (e.g. accept).
  virtual void EnsureConnected() {}
  /// Transport-specific teardown after the channel fds are closed.
  virtual void OnClosed() {}

  void SetChannel(UniqueFd read_fd, UniqueFd write_fd);
  /// For sockets: the same descriptor serves both directions.
  void SetChannel(UniqueFd fd);

  const ChannelOptions& options() const noexcept { return options_; }

 private:
  int read_fd() const noexcept;
  int write_fd() const noexcept;

  SerDesKind serdes_;
  RunnerMode mode_;
  RetryPolicy policy_;
  ChannelOptions options_;
  UniqueFd read_fd_;
  UniqueFd write_fd_;  // invalid when read_fd_ is bidirectional
  bool closed_ = false;
};

/// Standalone training-side entry point: equivalent to runner.Serve().
void ServeTraining(ChannelRunner& runner, const BundleHandler& handler,
                   const ExpectedSpecs& request_specs = std::nullopt);

}  // namespace mlbridge
