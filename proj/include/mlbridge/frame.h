#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <utility>

#include "mlbridge/serdes.h"

namespace mlbridge {

inline constexpr std::size_t kDefaultMaxFrameBytes = std::size_t{64} << 20;

/// Owning file descriptor.
class UniqueFd {
 public:
  UniqueFd() = default;
  explicit UniqueFd(int fd) : fd_(fd) {}
  ~UniqueFd() { Reset(); }

  UniqueFd(UniqueFd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  UniqueFd& operator=(UniqueFd&& other) noexcept {
    if (this != &other) Reset(std::exchange(other.fd_, -1));
    return *this;
  }
  UniqueFd(const UniqueFd&) = delete;
  UniqueFd& operator=(const UniqueFd&) = delete;

  int get() const noexcept { return fd_; }
  bool valid() const noexcept { return fd_ >= 0; }
  explicit operator bool() const noexcept { return valid(); }
  int release() noexcept { return std::exchange(fd_, -1); }
  void Reset(int fd = -1) noexcept;

 private:
  int fd_ = -1;
};

/// Wait forever.
inline constexpr std::chrono::milliseconds kNoTimeout{-1};

/// Writes a 4-byte little-endian length followed by the payload. Throws
/// Malformed if the payload exceeds `max_frame_bytes` (nothing is written)
/// and PeerClosed if the reader has gone away.
void WriteFrame(int fd, ByteView payload,
                std::size_t max_frame_bytes = kDefaultMaxFrameBytes);

/// Reads one frame. Returns nullopt on a clean end-of-stream at a frame
/// boundary; EOF inside a frame is PeerClosed. Throws Timeout if the whole
/// frame has not arrived within `timeout` and Malformed when the declared
/// length exceeds `max_frame_bytes`.
std::optional<Bytes> ReadFrameOrEof(
    int fd, std::chrono::milliseconds timeout,
    std::size_t max_frame_bytes = kDefaultMaxFrameBytes);

/// As ReadFrameOrEof, but end-of-stream is PeerClosed.
Bytes ReadFrame(int fd, std::chrono::milliseconds timeout,
                std::size_t max_frame_bytes = kDefaultMaxFrameBytes);

/// Ignores SIGPIPE process-wide so that writes to a closed pipe or socket
/// surface as EPIPE (and hence PeerClosed) instead of killing the process.
void IgnoreSigpipe();

}  // namespace mlbridge
