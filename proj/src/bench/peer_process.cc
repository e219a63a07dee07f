#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "mlbridge/child_process.h"

extern char** environ;

namespace mlbridge {

using Clock = std::chrono::steady_clock;

ChildProcess ChildProcess::Spawn(const std::filesystem::path& executable,
                                 const std::vector<std::string>& args) {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) {
    throw RunnerError::Malformed(std::string("pipe: ") + std::strerror(errno));
  }
  UniqueFd read_end(fds[0]);
  UniqueFd write_end(fds[1]);

  posix_spawn_file_actions_t actions;
  ::posix_spawn_file_actions_init(&actions);
  ::posix_spawn_file_actions_adddup2(&actions, write_end.get(), STDOUT_FILENO);

  std::vector<std::string> argv_storage;
  argv_storage.push_back(executable.string());
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  argv.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawn(&pid, executable.c_str(), &actions, nullptr,
                               argv.data(), environ);
  ::posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw RunnerError::Malformed("spawn " + executable.string() + ": " +
                                 std::strerror(rc));
  }
  return ChildProcess(pid, std::move(read_end));
}

ChildProcess::ChildProcess(ChildProcess&& other) noexcept
    : pid_(std::exchange(other.pid_, -1)),
      stdout_(std::move(other.stdout_)),
      buffer_(std::move(other.buffer_)) {}

ChildProcess& ChildProcess::operator=(ChildProcess&& other) noexcept {
  if (this != &other) {
    Terminate();
    pid_ = std::exchange(other.pid_, -1);
    stdout_ = std::move(other.stdout_);
    buffer_ = std::move(other.buffer_);
  }
  return *this;
}

ChildProcess::~ChildProcess() { Terminate(); }

std::string ChildProcess::ReadLine(std::chrono::milliseconds timeout) {
  const auto start = Clock::now();
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        Clock::now() - start);
    if (elapsed >= timeout) throw RunnerError::Timeout(elapsed.count());
    pollfd p{stdout_.get(), POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>((timeout - elapsed).count()));
    if (rc < 0 && errno != EINTR) {
      throw RunnerError::Malformed(std::string("poll: ") + std::strerror(errno));
    }
    if (rc <= 0) continue;
    char buf[256];
    const ssize_t n = ::read(stdout_.get(), buf, sizeof(buf));
    if (n == 0) throw RunnerError::PeerClosed();
    if (n > 0) buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

int ChildProcess::Wait() {
  if (pid_ < 0) return -1;
  int status = 0;
  while (::waitpid(pid_, &status, 0) < 0 && errno == EINTR) {
  }
  pid_ = -1;
  stdout_.Reset();
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
  return -1;
}

void ChildProcess::Terminate() {
  if (pid_ < 0) return;
  int status = 0;
  if (::waitpid(pid_, &status, WNOHANG) == pid_) {
    pid_ = -1;
    stdout_.Reset();
    return;
  }
  ::kill(pid_, SIGTERM);
  Wait();
}

}  // namespace mlbridge
