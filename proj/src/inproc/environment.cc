#include "mlbridge/environment.h"

namespace mlbridge {

EpisodeTrace RunEpisode(Environment& env, const Policy& policy,
                        int max_steps) {
  if (max_steps < 1) throw RunnerError::Malformed("max_steps must be >= 1");
  EpisodeTrace trace;
  env.SetDone(false);
  std::vector<float> obs = env.Reset();
  while (!env.done()) {
    if (static_cast<int>(trace.records.size()) == max_steps) return trace;
    const std::string agent = env.next_agent();
    const std::int64_t action = policy(agent, obs);
    trace.records.push_back({agent, obs.size(), action});
    obs = env.Step(action);
  }
  trace.terminal = true;
  return trace;
}

EpisodeTrace RunEpisode(Environment& env, const AgentMap& agents,
                        int max_steps) {
  if (agents.empty()) throw RunnerError::Malformed("agent map is empty");
  return RunEpisode(
      env,
      [&](const std::string& label, std::span<const float> obs) {
        const auto it = agents.find(label);
        if (it == agents.end()) {
          throw RunnerError::Malformed("unknown agent '" + label + "'");
        }
        return AgentAct(it->second, obs);
      },
      max_steps);
}

}  // namespace mlbridge
