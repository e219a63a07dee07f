#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "mlbridge/channel_runner.h"
#include "mlbridge/environment.h"

namespace mlbridge {

// ---------------------------------------------------------------------------
// Mock phase-ordering environment.

/// Observation is a seeded 300-d embedding; each step takes a subsequence id
/// in [0, num_subsequences), perturbs the embedding deterministically, and
/// the episode ends after `threshold` steps.
class MockPhaseEnv final : public Environment {
 public:
  static constexpr int kEmbeddingDim = 300;

  MockPhaseEnv(int num_subsequences, int threshold, std::uint64_t seed,
               std::string agent = "poset");

  std::vector<float> Reset() override;
  /// Malformed on an out-of-range action.
  std::vector<float> Step(std::int64_t action) override;

  int num_subsequences() const noexcept { return num_subsequences_; }

 private:
  int num_subsequences_;
  int threshold_;
  std::uint64_t seed_;
  int steps_ = 0;
  std::vector<float> obs_;
};

std::unique_ptr<Environment> MakeMockPhaseEnv(int num_subsequences,
                                              int threshold,
                                              std::uint64_t seed);

// ---------------------------------------------------------------------------
// Peer handlers used by the loopback server and the sweep.

BundleHandler MakeEchoHandler();

/// {"obs": numeric[L]} -> {"output": F32[1]} through a seeded L->1 dense
/// model (SweepModel), created on first use of each L.
BundleHandler MakeSweepHandler(std::uint64_t seed);
MlpModel SweepModel(std::int64_t len, std::uint64_t seed);

/// {"obs": numeric[input_dim]} -> {"action": I64 scalar}.
BundleHandler MakeAgentHandler(MlpModel model);

// ---------------------------------------------------------------------------
// Round-trip-time sweep.

enum class RunnerKind { kInProcess, kPipe, kRpc };

std::string_view ToString(RunnerKind kind);
std::optional<RunnerKind> ParseRunnerKind(std::string_view token);

struct SweepConfig {
  RunnerKind runner = RunnerKind::kInProcess;
  SerDesKind serdes = SerDesKind::kBitstream;
  std::int64_t min_len = 500;
  std::int64_t max_len = 5000;
  std::int64_t step = 500;
  int repeats = 3;
  std::uint64_t seed = 1;

  /// Malformed unless min_len >= 1, step >= 1, max_len >= min_len, repeats
  /// odd and >= 1, and the serdes is usable with the runner.
  void Validate() const;
  std::size_t point_count() const;
  /// Serdes column value: "none" for the in-process runner.
  std::string serdes_label() const;
};

struct RttRecord {
  std::int64_t vector_len = 0;
  std::int64_t rtt_micros = 0;  // median over repeats, >= 1
  std::string runner;
  std::string serdes;
};

struct SweepResult {
  std::vector<RttRecord> records;
  std::int64_t cumulative_micros = 0;
};

inline constexpr std::string_view kCsvHeader = "vector_len,rtt_micros,runner,serdes";

struct SweepPeer {
  /// Executable providing the `serve` subcommand. When empty, the peer runs
  /// on a thread of this process instead.
  std::filesystem::path executable;
  /// Directory for FIFO files; a fresh temporary directory when empty.
  std::filesystem::path scratch_dir;
};

/// Runs the sweep. Each record is written to `csv` (if given) and flushed
/// as soon as it is measured, so a failed point leaves the earlier rows.
/// Errors propagate as RunnerError.
SweepResult RttSweep(const SweepConfig& config, const SweepPeer& peer = {},
                     std::ostream* csv = nullptr);

}  // namespace mlbridge
