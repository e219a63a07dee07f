#include "mlbridge/inproc_runner.h"

#include <algorithm>

namespace mlbridge {

InProcessRunner::InProcessRunner(AgentMap agents) : agents_(std::move(agents)) {
  if (agents_.empty()) throw RunnerError::Malformed("agent map is empty");
}

void InProcessRunner::AttachEnvironment(Environment* env, int max_steps) {
  if (max_steps < 1) throw RunnerError::Malformed("max_steps must be >= 1");
  env_ = env;
  max_steps_ = max_steps;
}

EpisodeTrace InProcessRunner::RunEpisode(Environment& env, int max_steps) {
  last_trace_ = mlbridge::RunEpisode(env, agents_, max_steps);
  return *last_trace_;
}

const MlpModel& InProcessRunner::SelectAgent(const FeatureBundle& input) const {
  if (const auto* label = input.Find("agent")) {
    if (label->dtype() != DType::kStr || label->size() != 1) {
      throw RunnerError::Malformed("'agent' must be a Str scalar");
    }
    const auto& name = label->values<std::string>()[0];
    const auto it = agents_.find(name);
    if (it == agents_.end()) {
      throw RunnerError::Malformed("unknown agent '" + name + "'");
    }
    return it->second;
  }
  if (agents_.size() != 1) {
    throw RunnerError::Malformed("several agents loaded and no 'agent' given");
  }
  return agents_.begin()->second;
}

FeatureBundle InProcessRunner::EvaluateUntyped(
    const FeatureBundle& input, std::span<const TensorSpec> output_specs) {
  FeatureBundle out;
  if (env_ != nullptr) {
    const auto& trace = RunEpisode(*env_, max_steps_);
    for (const auto& spec : output_specs) {
      if (spec.key == "steps") {
        out.Put(TensorValue::Scalar<std::int64_t>(
            "steps", static_cast<std::int64_t>(trace.records.size())));
      } else if (spec.key == "terminal") {
        out.Put(TensorValue::Scalar<bool>("terminal", trace.terminal));
      } else {
        throw RunnerError::Malformed("unknown episode output '" + spec.key +
                                     "'");
      }
    }
    return out;
  }

  const auto& obs = input.Get("obs", DType::kF32).values<float>();
  const auto& model = SelectAgent(input);
  if (static_cast<std::int64_t>(obs.size()) != model.input_dim()) {
    throw RunnerError::Malformed("'obs' has " + std::to_string(obs.size()) +
                                 " elements, model expects " +
                                 std::to_string(model.input_dim()));
  }
  std::optional<std::vector<float>> logits;
  for (const auto& spec : output_specs) {
    if (!logits) logits = model.Forward(obs);
    if (spec.key == "action") {
      const auto action =
          std::max_element(logits->begin(), logits->end()) - logits->begin();
      out.Put(TensorValue::Scalar<std::int64_t>("action", action));
    } else if (spec.key == "output") {
      out.Put(TensorValue::Vector<float>("output", *logits));
    } else {
      throw RunnerError::Malformed("unknown output '" + spec.key + "'");
    }
  }
  return out;
}

}  // namespace mlbridge
