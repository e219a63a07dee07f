#include "mlbridge/pipe_runner.h"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

namespace mlbridge {
namespace {

using Clock = std::chrono::steady_clock;

void EnsureFifo(const std::filesystem::path& path) {
  if (::mkfifo(path.c_str(), 0600) == 0) return;
  if (errno != EEXIST) {
    throw RunnerError::Malformed("mkfifo " + path.string() + ": " +
                                 std::strerror(errno));
  }
  struct stat st {};
  if (::stat(path.c_str(), &st) != 0 || !S_ISFIFO(st.st_mode)) {
    throw RunnerError::Malformed(path.string() + " exists and is not a fifo");
  }
}

void ClearNonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL);
  if (flags >= 0) ::fcntl(fd, F_SETFL, flags & ~O_NONBLOCK);
}

}  // namespace

PipeModelRunner::PipeModelRunner(PipeEndpoints endpoints, SerDesKind serdes,
                                 RunnerMode mode, const RetryPolicy& policy,
                                 ChannelOptions options)
    : ChannelRunner(serdes, mode, policy, std::move(options)),
      endpoints_(std::move(endpoints)) {}

PipeModelRunner::~PipeModelRunner() { Close(); }

std::unique_ptr<PipeModelRunner> PipeModelRunner::Open(
    const PipeEndpoints& endpoints, SerDesKind serdes, RunnerMode mode,
    const RetryPolicy& policy, ChannelOptions options) {
  if (endpoints.read_path.empty() || endpoints.write_path.empty()) {
    throw RunnerError::Malformed("empty pipe path");
  }
  if (endpoints.read_path == endpoints.write_path) {
    throw RunnerError::Malformed("read and write pipes must differ");
  }
  std::unique_ptr<PipeModelRunner> runner(new PipeModelRunner(
      endpoints, serdes, mode, policy, std::move(options)));
  runner->Connect();
  return runner;
}

// The read end is opened non-blocking, which succeeds at once. The write
// end only opens once the peer holds its read end, so it is polled until
// the deadline. Since both sides follow the same order, neither can block
// the other.
void PipeModelRunner::Connect() {
  EnsureFifo(endpoints_.read_path);
  EnsureFifo(endpoints_.write_path);

  UniqueFd rd(::open(endpoints_.read_path.c_str(), O_RDONLY | O_NONBLOCK));
  if (!rd) {
    throw RunnerError::Malformed("open " + endpoints_.read_path.string() +
                                 ": " + std::strerror(errno));
  }
  const auto start = Clock::now();
  const auto deadline = start + policy().per_call_timeout;
  UniqueFd wr;
  int attempt = 0;
  for (;;) {
    if (options().on_connect_attempt) options().on_connect_attempt(attempt++);
    wr.Reset(::open(endpoints_.write_path.c_str(), O_WRONLY | O_NONBLOCK));
    if (wr) break;
    // The peer connected and already left, unlinking the files.
    if (errno == ENOENT) throw RunnerError::PeerClosed();
    if (errno != ENXIO && errno != EINTR) {
      throw RunnerError::Malformed("open " + endpoints_.write_path.string() +
                                   ": " + std::strerror(errno));
    }
    if (Clock::now() >= deadline) {
      OnClosed();
      throw RunnerError::Timeout(
          std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() -
                                                                start)
              .count());
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  ClearNonblocking(wr.get());
  SetChannel(std::move(rd), std::move(wr));
}

void PipeModelRunner::OnClosed() {
  for (const auto& path : {endpoints_.read_path, endpoints_.write_path}) {
    struct stat st {};
    if (::lstat(path.c_str(), &st) == 0 && S_ISFIFO(st.st_mode)) {
      ::unlink(path.c_str());
    }
  }
}

}  // namespace mlbridge
