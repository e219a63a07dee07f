#include <cmath>
#include <random>

#include "mlbridge/bench.h"

namespace mlbridge {

MockPhaseEnv::MockPhaseEnv(int num_subsequences, int threshold,
                           std::uint64_t seed, std::string agent)
    : num_subsequences_(num_subsequences), threshold_(threshold), seed_(seed) {
  if (num_subsequences_ < 1) {
    throw RunnerError::Malformed("num_subsequences must be >= 1");
  }
  if (threshold_ < 1) throw RunnerError::Malformed("threshold must be >= 1");
  SetNextAgent(std::move(agent));
}

std::vector<float> MockPhaseEnv::Reset() {
  std::mt19937_64 rng(seed_);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  obs_.resize(kEmbeddingDim);
  for (auto& x : obs_) x = dist(rng);
  steps_ = 0;
  return obs_;
}

std::vector<float> MockPhaseEnv::Step(std::int64_t action) {
  if (action < 0 || action >= num_subsequences_) {
    throw RunnerError::Malformed("action " + std::to_string(action) +
                                 " outside [0, " +
                                 std::to_string(num_subsequences_) + ")");
  }
  // Stand-in for re-embedding the transformed module.
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    const double phase = 0.37 * static_cast<double>((action + 1) * (i + 1)) +
                         static_cast<double>(steps_);
    obs_[i] = static_cast<float>(0.9 * obs_[i] + 0.1 * std::sin(phase));
  }
  if (++steps_ >= threshold_) SetDone();
  return obs_;
}

std::unique_ptr<Environment> MakeMockPhaseEnv(int num_subsequences,
                                              int threshold,
                                              std::uint64_t seed) {
  return std::make_unique<MockPhaseEnv>(num_subsequences, threshold, seed);
}

}  // namespace mlbridge
