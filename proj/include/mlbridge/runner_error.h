#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mlbridge {

enum class DType : std::uint8_t;

/// Failure reported by any bridge operation. Every transport call either
/// returns a value or throws exactly one of these.
class RunnerError : public std::runtime_error {
 public:
  enum class Kind {
    kTimeout,
    kRetriesExhausted,
    kPeerClosed,
    kMalformed,
    kTypeMismatch,
    kModelError,
  };

  static RunnerError Timeout(std::int64_t elapsed_ms);
  static RunnerError RetriesExhausted(int attempts);
  static RunnerError PeerClosed();
  static RunnerError Malformed(std::string reason);
  static RunnerError TypeMismatch(std::string key, DType expected,
                                  DType found);
  static RunnerError ModelError(std::string message);

  Kind kind() const noexcept { return kind_; }

  // Payload accessors. Only the field matching kind() is meaningful.
  std::int64_t elapsed_ms() const noexcept { return elapsed_ms_; }
  int attempts() const noexcept { return attempts_; }
  const std::string& reason() const noexcept { return reason_; }
  const std::string& key() const noexcept { return key_; }
  DType expected() const noexcept { return expected_; }
  DType found() const noexcept { return found_; }

 private:
  RunnerError(Kind kind, const std::string& what);

  Kind kind_;
  std::int64_t elapsed_ms_ = 0;
  int attempts_ = 0;
  std::string reason_;
  std::string key_;
  DType expected_{};
  DType found_{};
};

std::string_view ToString(RunnerError::Kind kind);

}  // namespace mlbridge
