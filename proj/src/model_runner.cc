#include "mlbridge/model_runner.h"

namespace mlbridge {

FeatureBundle ModelRunner::Evaluate(std::span<const TensorSpec> output_specs) {
  if (output_specs.empty()) {
    throw RunnerError::Malformed("no output specs declared");
  }
  auto result = ConformTo(EvaluateUntyped(staged_, output_specs), output_specs);
  staged_.Clear();
  return result;
}

}  // namespace mlbridge
