#include "mlbridge/rpc_runner.h"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace mlbridge {
namespace {

using Clock = std::chrono::steady_clock;

struct AddrInfoDeleter {
  void operator()(addrinfo* ai) const { ::freeaddrinfo(ai); }
};
using AddrInfoPtr = std::unique_ptr<addrinfo, AddrInfoDeleter>;

AddrInfoPtr Resolve(const RpcEndpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* out = nullptr;
  const std::string port = std::to_string(ep.port);
  const int rc = ::getaddrinfo(ep.address.empty() ? nullptr : ep.address.c_str(),
                               port.c_str(), &hints, &out);
  if (rc != 0) {
    throw RunnerError::Malformed("cannot resolve " + ep.address + ": " +
                                 ::gai_strerror(rc));
  }
  return AddrInfoPtr(out);
}

void SetNonblocking(int fd, bool on) {
  const int flags = ::fcntl(fd, F_GETFL);
  if (flags >= 0) {
    ::fcntl(fd, F_SETFL, on ? (flags | O_NONBLOCK) : (flags & ~O_NONBLOCK));
  }
}

void SetNoDelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

// One connection attempt over every resolved address.
UniqueFd TryConnect(const addrinfo* addrs, std::chrono::milliseconds timeout) {
  for (const addrinfo* ai = addrs; ai != nullptr; ai = ai->ai_next) {
    UniqueFd fd(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC,
                         ai->ai_protocol));
    if (!fd) continue;
    SetNonblocking(fd.get(), true);
    int rc = ::connect(fd.get(), ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      pollfd p{fd.get(), POLLOUT, 0};
      rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
      if (rc <= 0) continue;
      int err = 0;
      socklen_t len = sizeof(err);
      ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
      rc = err == 0 ? 0 : -1;
    }
    if (rc != 0) continue;
    SetNonblocking(fd.get(), false);
    SetNoDelay(fd.get());
    return fd;
  }
  return UniqueFd();
}

}  // namespace

void CheckRpcSerDes(SerDesKind serdes) {
  if (serdes != SerDesKind::kTaggedBinary) {
    throw RunnerError::Malformed("unsupported serdes '" +
                                 std::string(ToString(serdes)) +
                                 "' for rpc runner (tagged only)");
  }
}

RpcModelRunner::RpcModelRunner(RpcEndpoint endpoint, SerDesKind serdes,
                               RunnerMode mode, const RetryPolicy& policy,
                               ChannelOptions options)
    : ChannelRunner(serdes, mode, policy, std::move(options)),
      endpoint_(std::move(endpoint)) {}

RpcModelRunner::~RpcModelRunner() { Close(); }

std::unique_ptr<RpcModelRunner> RpcModelRunner::Open(
    const RpcEndpoint& endpoint, SerDesKind serdes, RunnerMode mode,
    const RetryPolicy& policy, ChannelOptions options) {
  CheckRpcSerDes(serdes);
  const bool listening = mode == RunnerMode::kTraining;
  if (endpoint.port < (listening ? 0 : 1) || endpoint.port > 65535) {
    throw RunnerError::Malformed("port out of range: " +
                                 std::to_string(endpoint.port));
  }
  std::unique_ptr<RpcModelRunner> runner(new RpcModelRunner(
      endpoint, serdes, mode, policy, std::move(options)));
  if (listening) {
    runner->Listen();
  } else {
    runner->ConnectWithBackoff();
  }
  return runner;
}

void RpcModelRunner::Listen() {
  const auto addrs = Resolve(endpoint_, /*passive=*/true);
  int last_errno = 0;
  for (const addrinfo* ai = addrs.get(); ai != nullptr; ai = ai->ai_next) {
    UniqueFd fd(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC,
                         ai->ai_protocol));
    if (!fd) continue;
    int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd.get(), ai->ai_addr, ai->ai_addrlen) != 0 ||
        ::listen(fd.get(), 1) != 0) {
      last_errno = errno;
      continue;
    }
    sockaddr_storage bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&bound), &len);
    bound_port_ = bound.ss_family == AF_INET6
                      ? ntohs(reinterpret_cast<sockaddr_in6*>(&bound)->sin6_port)
                      : ntohs(reinterpret_cast<sockaddr_in*>(&bound)->sin_port);
    listener_ = std::move(fd);
    return;
  }
  throw RunnerError::Malformed("cannot listen on " + endpoint_.address + ":" +
                               std::to_string(endpoint_.port) + ": " +
                               std::strerror(last_errno));
}

void RpcModelRunner::ConnectWithBackoff() {
  const auto addrs = Resolve(endpoint_, /*passive=*/false);
  RunWithBackoff(policy(), [&](int attempt) {
    if (options().on_connect_attempt) options().on_connect_attempt(attempt);
    UniqueFd fd = TryConnect(addrs.get(), policy().per_call_timeout);
    if (!fd) return false;
    SetChannel(std::move(fd));
    bound_port_ = endpoint_.port;
    connected_ = true;
    return true;
  });
}

void RpcModelRunner::EnsureConnected() {
  if (connected_) return;
  if (!listener_) throw RunnerError::Malformed("runner is not listening");
  const auto start = Clock::now();
  pollfd p{listener_.get(), POLLIN, 0};
  int rc;
  while ((rc = ::poll(&p, 1,
                      static_cast<int>(policy().per_call_timeout.count()))) <
             0 &&
         errno == EINTR) {
  }
  if (rc == 0) {
    throw RunnerError::Timeout(
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() -
                                                              start)
            .count());
  }
  UniqueFd fd(::accept4(listener_.get(), nullptr, nullptr, SOCK_CLOEXEC));
  if (!fd) {
    throw RunnerError::Malformed(std::string("accept: ") +
                                 std::strerror(errno));
  }
  SetNoDelay(fd.get());
  SetChannel(std::move(fd));
  connected_ = true;
}

void RpcModelRunner::OnClosed() {
  listener_.Reset();
  connected_ = false;
}

}  // namespace mlbridge
