#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mlbridge/mlp_model.h"

namespace mlbridge {

/// RL environment driven by the host. Subclasses implement Reset/Step and
/// call SetDone() when the episode is over and SetNextAgent() to choose
/// which agent answers the next observation.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::vector<float> Reset() = 0;
  virtual std::vector<float> Step(std::int64_t action) = 0;

  bool done() const noexcept { return done_; }
  void SetDone(bool done = true) noexcept { done_ = done; }

  const std::string& next_agent() const noexcept { return next_agent_; }

 protected:
  void SetNextAgent(std::string label) { next_agent_ = std::move(label); }

 private:
  bool done_ = false;
  std::string next_agent_ = "agent";
};

/// Agent label -> policy network.
using AgentMap = std::map<std::string, MlpModel, std::less<>>;

struct EpisodeRecord {
  std::string agent;
  std::size_t observation_len = 0;
  std::int64_t action = 0;

  bool operator==(const EpisodeRecord&) const = default;
};

struct EpisodeTrace {
  std::vector<EpisodeRecord> records;
  bool terminal = false;  // false when the step bound ended the episode

  bool operator==(const EpisodeTrace&) const = default;
};

/// Maps (agent label, observation) to an action.
using Policy =
    std::function<std::int64_t(const std::string& agent, std::span<const float>)>;

/// obs = Reset(); then until done or `max_steps` queries: ask the policy for
/// next_agent()'s action, record it, obs = Step(action).
EpisodeTrace RunEpisode(Environment& env, const Policy& policy, int max_steps);

/// As above with argmax agents. Malformed if the environment names a label
/// that is not in `agents`.
EpisodeTrace RunEpisode(Environment& env, const AgentMap& agents,
                        int max_steps);

}  // namespace mlbridge
