#include "mlbridge/channel_runner.h"

#include <exception>

namespace mlbridge {

std::string_view ToString(RunnerMode mode) {
  return mode == RunnerMode::kTraining ? "training" : "inference";
}

ChannelRunner::ChannelRunner(SerDesKind serdes, RunnerMode mode,
                             RetryPolicy policy, ChannelOptions options)
    : serdes_(serdes),
      mode_(mode),
      policy_(policy),
      options_(std::move(options)) {
  policy_.Validate();
  IgnoreSigpipe();
}

ChannelRunner::~ChannelRunner() = default;

void ChannelRunner::SetChannel(UniqueFd read_fd, UniqueFd write_fd) {
  read_fd_ = std::move(read_fd);
  write_fd_ = std::move(write_fd);
}

void ChannelRunner::SetChannel(UniqueFd fd) {
  read_fd_ = std::move(fd);
  write_fd_.Reset();
}

int ChannelRunner::read_fd() const noexcept { return read_fd_.get(); }

int ChannelRunner::write_fd() const noexcept {
  return write_fd_.valid() ? write_fd_.get() : read_fd_.get();
}

FeatureBundle ChannelRunner::EvaluateUntyped(
    const FeatureBundle& input, std::span<const TensorSpec> output_specs) {
  if (mode_ != RunnerMode::kInference) {
    throw RunnerError::Malformed("evaluate requires inference mode");
  }
  if (closed_) throw RunnerError::Malformed("runner is closed");
  EnsureConnected();
  const auto& serdes = GetSerDes(serdes_);
  WriteFrame(write_fd(), serdes.Serialize(input), options_.max_frame_bytes);
  const Bytes reply =
      ReadFrame(read_fd(), policy_.per_call_timeout, options_.max_frame_bytes);
  return serdes.Deserialize(
      reply, std::vector<TensorSpec>(output_specs.begin(), output_specs.end()));
}

void ChannelRunner::Serve(const BundleHandler& handler,
                          const ExpectedSpecs& request_specs) {
  if (mode_ != RunnerMode::kTraining) {
    throw RunnerError::Malformed("serve requires training mode");
  }
  if (closed_) throw RunnerError::Malformed("runner is closed");
  EnsureConnected();
  const auto& serdes = GetSerDes(serdes_);
  for (;;) {
    std::optional<Bytes> request;
    try {
      request = ReadFrameOrEof(read_fd(), kNoTimeout, options_.max_frame_bytes);
    } catch (const RunnerError& e) {
      if (e.kind() == RunnerError::Kind::kPeerClosed) return;
      throw;
    }
    if (!request || request->empty()) return;

    FeatureBundle reply;
    try {
      reply = handler(serdes.Deserialize(*request, request_specs));
    } catch (const std::exception& e) {
      reply.Clear();
      reply.Put(TensorValue::Scalar<std::string>(std::string(kErrorKey),
                                                 e.what()));
    }
    Bytes encoded;
    try {
      encoded = serdes.Serialize(reply);
    } catch (const RunnerError& e) {
      FeatureBundle err;
      err.Put(TensorValue::Scalar<std::string>(std::string(kErrorKey),
                                               e.what()));
      encoded = serdes.Serialize(err);
    }
    try {
      WriteFrame(write_fd(), encoded, options_.max_frame_bytes);
    } catch (const RunnerError& e) {
      if (e.kind() == RunnerError::Kind::kPeerClosed) return;
      throw;
    }
  }
}

void ChannelRunner::Close() {
  if (closed_) return;
  closed_ = true;
  if (mode_ == RunnerMode::kInference && read_fd_.valid()) {
    try {
      WriteFrame(write_fd(), {}, options_.max_frame_bytes);
    } catch (const RunnerError&) {
      // Peer already gone.
    }
  }
  read_fd_.Reset();
  write_fd_.Reset();
  OnClosed();
}

void ServeTraining(ChannelRunner& runner, const BundleHandler& handler,
                   const ExpectedSpecs& request_specs) {
  runner.Serve(handler, request_specs);
}

}  // namespace mlbridge
