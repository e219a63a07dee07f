#include "mlbridge/runner_error.h"

#include "mlbridge/tensor.h"

namespace mlbridge {

RunnerError::RunnerError(Kind kind, const std::string& what)
    : std::runtime_error(what), kind_(kind) {}

RunnerError RunnerError::Timeout(std::int64_t elapsed_ms) {
  RunnerError e(Kind::kTimeout,
                "timeout after " + std::to_string(elapsed_ms) + " ms");
  e.elapsed_ms_ = elapsed_ms;
  return e;
}

RunnerError RunnerError::RetriesExhausted(int attempts) {
  RunnerError e(Kind::kRetriesExhausted,
                "retries exhausted after " + std::to_string(attempts) +
                    " attempts");
  e.attempts_ = attempts;
  return e;
}

RunnerError RunnerError::PeerClosed() {
  return RunnerError(Kind::kPeerClosed, "peer closed the channel");
}

RunnerError RunnerError::Malformed(std::string reason) {
  RunnerError e(Kind::kMalformed, "malformed: " + reason);
  e.reason_ = std::move(reason);
  return e;
}

RunnerError RunnerError::TypeMismatch(std::string key, DType expected,
                                      DType found) {
  RunnerError e(Kind::kTypeMismatch,
                "type mismatch for '" + key + "': expected " +
                    std::string(ToString(expected)) + ", found " +
                    std::string(ToString(found)));
  e.key_ = std::move(key);
  e.expected_ = expected;
  e.found_ = found;
  return e;
}

RunnerError RunnerError::ModelError(std::string message) {
  RunnerError e(Kind::kModelError, "model error: " + message);
  e.reason_ = std::move(message);
  return e;
}

std::string_view ToString(RunnerError::Kind kind) {
  switch (kind) {
    case RunnerError::Kind::kTimeout:
      return "Timeout";
    case RunnerError::Kind::kRetriesExhausted:
      return "RetriesExhausted";
    case RunnerError::Kind::kPeerClosed:
      return "PeerClosed";
    case RunnerError::Kind::kMalformed:
      return "Malformed";
    case RunnerError::Kind::kTypeMismatch:
      return "TypeMismatch";
    case RunnerError::Kind::kModelError:
      return "ModelError";
  }
  return "Unknown";
}

}  // namespace mlbridge
