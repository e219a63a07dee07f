#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "mlbridge/frame.h"

namespace mlbridge {

/// A spawned helper process whose stdout is piped back to us. The child is
/// terminated and reaped on destruction if still running.
class ChildProcess {
 public:
  static ChildProcess Spawn(const std::filesystem::path& executable,
                            const std::vector<std::string>& args);

  ChildProcess(ChildProcess&& other) noexcept;
  ChildProcess& operator=(ChildProcess&& other) noexcept;
  ~ChildProcess();

  pid_t pid() const noexcept { return pid_; }

  /// Next line of the child's stdout without the newline. Timeout if none
  /// arrives in time; PeerClosed if the child closes stdout first.
  std::string ReadLine(std::chrono::milliseconds timeout);

  /// Blocks until exit; returns the exit status (128 + signal if killed).
  int Wait();
  void Terminate();

 private:
  ChildProcess(pid_t pid, UniqueFd out) : pid_(pid), stdout_(std::move(out)) {}

  pid_t pid_ = -1;
  UniqueFd stdout_;
  std::string buffer_;
};

}  // namespace mlbridge
