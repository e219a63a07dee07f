#include "mlbridge/frame.h"

#include <poll.h>
#include <signal.h>
#include <sys/uio.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>

namespace mlbridge {

using Clock = std::chrono::steady_clock;

void UniqueFd::Reset(int fd) noexcept {
  if (fd_ >= 0) ::close(fd_);
  fd_ = fd;
}

void IgnoreSigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

namespace {

[[noreturn]] void ThrowIoError(const char* what) {
  if (errno == EPIPE || errno == ECONNRESET || errno == ENOTCONN) {
    throw RunnerError::PeerClosed();
  }
  throw RunnerError::Malformed(std::string(what) + ": " +
                               std::strerror(errno));
}

void WaitWritable(int fd) {
  pollfd p{fd, POLLOUT, 0};
  while (::poll(&p, 1, -1) < 0) {
    if (errno != EINTR) ThrowIoError("poll");
  }
}

std::int64_t ElapsedMs(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() -
                                                               start)
      .count();
}

// Fills buf completely. Returns the number of bytes read before EOF, which
// equals n on success.
std::size_t ReadFully(int fd, std::uint8_t* buf, std::size_t n,
                      std::chrono::milliseconds timeout,
                      Clock::time_point start) {
  std::size_t got = 0;
  while (got < n) {
    int wait_ms = -1;
    if (timeout.count() >= 0) {
      const auto left = timeout.count() - ElapsedMs(start);
      if (left <= 0) throw RunnerError::Timeout(ElapsedMs(start));
      wait_ms = static_cast<int>(left);
    }
    pollfd p{fd, POLLIN, 0};
    const int rc = ::poll(&p, 1, wait_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      ThrowIoError("poll");
    }
    if (rc == 0) throw RunnerError::Timeout(ElapsedMs(start));
    const ssize_t r = ::read(fd, buf + got, n - got);
    if (r < 0) {
      if (errno == EINTR || errno == EAGAIN || errno == EWOULDBLOCK) continue;
      ThrowIoError("read");
    }
    if (r == 0) return got;
    got += static_cast<std::size_t>(r);
  }
  return got;
}

}  // namespace

void WriteFrame(int fd, ByteView payload, std::size_t max_frame_bytes) {
  if (payload.size() > max_frame_bytes) {
    throw RunnerError::Malformed("frame of " + std::to_string(payload.size()) +
                                 " bytes exceeds limit of " +
                                 std::to_string(max_frame_bytes));
  }
  const auto len = static_cast<std::uint32_t>(payload.size());
  const std::uint8_t header[4] = {
      static_cast<std::uint8_t>(len), static_cast<std::uint8_t>(len >> 8),
      static_cast<std::uint8_t>(len >> 16),
      static_cast<std::uint8_t>(len >> 24)};

  iovec iov[2] = {
      {const_cast<std::uint8_t*>(header), sizeof(header)},
      {const_cast<std::uint8_t*>(payload.data()), payload.size()},
  };
  iovec* cur = iov;
  int count = payload.empty() ? 1 : 2;
  while (count > 0) {
    const ssize_t w = ::writev(fd, cur, count);
    if (w < 0) {
      if (errno == EINTR) continue;
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        WaitWritable(fd);
        continue;
      }
      ThrowIoError("write");
    }
    auto written = static_cast<std::size_t>(w);
    while (count > 0 && written >= cur->iov_len) {
      written -= cur->iov_len;
      ++cur;
      --count;
    }
    if (count > 0) {
      cur->iov_base = static_cast<std::uint8_t*>(cur->iov_base) + written;
      cur->iov_len -= written;
    }
  }
}

std::optional<Bytes> ReadFrameOrEof(int fd, std::chrono::milliseconds timeout,
                                    std::size_t max_frame_bytes) {
  const auto start = Clock::now();
  std::uint8_t header[4];
  const auto got = ReadFully(fd, header, sizeof(header), timeout, start);
  if (got == 0) return std::nullopt;
  if (got < sizeof(header)) throw RunnerError::PeerClosed();

  const std::size_t len = std::size_t{header[0]} | std::size_t{header[1]} << 8 |
                          std::size_t{header[2]} << 16 |
                          std::size_t{header[3]} << 24;
  if (len > max_frame_bytes) {
    throw RunnerError::Malformed("declared frame length " +
                                 std::to_string(len) + " exceeds limit of " +
                                 std::to_string(max_frame_bytes));
  }
  Bytes payload(len);
  if (ReadFully(fd, payload.data(), len, timeout, start) < len) {
    throw RunnerError::PeerClosed();
  }
  return payload;
}

Bytes ReadFrame(int fd, std::chrono::milliseconds timeout,
                std::size_t max_frame_bytes) {
  auto frame = ReadFrameOrEof(fd, timeout, max_frame_bytes);
  if (!frame) throw RunnerError::PeerClosed();
  return std::move(*frame);
}

}  // namespace mlbridge
