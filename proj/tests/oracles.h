#pragma once

#include <sys/wait.h>

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "mlbridge/mlp_model.h"

namespace mlbridge::testing {

// Straight triple loop over the layer buffers, all in double.
inline std::vector<double> NaiveForward(const MlpModel& m,
                                        const std::vector<float>& input) {
  std::vector<double> x(input.begin(), input.end());
  for (const auto& l : m.layers()) {
    std::vector<double> y(static_cast<std::size_t>(l.rows));
    for (std::int64_t r = 0; r < l.rows; ++r) {
      double acc = 0;
      for (std::int64_t c = 0; c < l.cols; ++c) {
        acc += static_cast<double>(
                   l.weights[static_cast<std::size_t>(r * l.cols + c)]) *
               x[static_cast<std::size_t>(c)];
      }
      acc += l.bias[static_cast<std::size_t>(r)];
      if (l.activation == Activation::kRelu && acc < 0) acc = 0;
      y[static_cast<std::size_t>(r)] = acc;
    }
    x = std::move(y);
  }
  return x;
}

struct CommandResult {
  int exit_code = -1;
  std::string out;
};

// Runs a shell command, capturing stdout.
inline CommandResult RunCommand(const std::string& cmd) {
  CommandResult r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace mlbridge::testing
