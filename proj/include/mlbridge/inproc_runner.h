#pragma once

#include <memory>
#include <optional>

#include "mlbridge/environment.h"
#include "mlbridge/model_runner.h"

namespace mlbridge {

/// Evaluates MLP agents inside the host process; no IPC.
///
/// Single-shot: the staged input holds "obs" (F32, input_dim elements) and,
/// when more than one agent is loaded, "agent" (Str scalar). Declared outputs
/// may be "action" (I64 scalar, argmax) and/or "output" (F32, raw network
/// output).
///
/// Episode: with an environment attached, Evaluate() runs a whole episode
/// and answers "steps" (I64 scalar) and/or "terminal" (Bool scalar); the
/// trace is available from last_trace().
class InProcessRunner final : public ModelRunner {
 public:
  explicit InProcessRunner(AgentMap agents);

  void AttachEnvironment(Environment* env, int max_steps);
  void DetachEnvironment() { env_ = nullptr; }

  EpisodeTrace RunEpisode(Environment& env, int max_steps);
  const std::optional<EpisodeTrace>& last_trace() const noexcept {
    return last_trace_;
  }
  const AgentMap& agents() const noexcept { return agents_; }

 protected:
  FeatureBundle EvaluateUntyped(
      const FeatureBundle& input,
      std::span<const TensorSpec> output_specs) override;

 private:
  const MlpModel& SelectAgent(const FeatureBundle& input) const;

  AgentMap agents_;
  Environment* env_ = nullptr;
  int max_steps_ = 1;
  std::optional<EpisodeTrace> last_trace_;
};

}  // namespace mlbridge
