#pragma once

#include <span>
#include <utility>
#include <vector>

#include "mlbridge/tensor.h"

namespace mlbridge {

/// Uniform host-side contract for querying a model, independent of how the
/// query travels (pipes, sockets, or an in-process evaluator).
///
/// Inputs are staged with PopulateFeatures() and sent on Evaluate(). A
/// successful Evaluate() clears the staged input so the next round starts
/// fresh. A runner is single-threaded; use one runner per thread.
class ModelRunner {
 public:
  virtual ~ModelRunner() = default;

  ModelRunner(const ModelRunner&) = delete;
  ModelRunner& operator=(const ModelRunner&) = delete;

  void PopulateFeature(TensorValue value) { staged_.Put(std::move(value)); }

  template <typename... Values>
  void PopulateFeatures(Values&&... values) {
    (PopulateFeature(std::forward<Values>(values)), ...);
  }

  const FeatureBundle& staged_input() const noexcept { return staged_; }

  /// Sends the staged input and returns a bundle matching `output_specs`
  /// key-for-key and dtype-for-dtype, in declaration order.
  FeatureBundle Evaluate(std::span<const TensorSpec> output_specs);

  FeatureBundle Evaluate(std::initializer_list<TensorSpec> output_specs) {
    return Evaluate(std::span<const TensorSpec>(output_specs.begin(),
                                                output_specs.size()));
  }

  /// Convenience for a single scalar output.
  template <typename T>
  StorageOf<T> EvaluateScalar(std::string key) {
    const TensorSpec spec{std::move(key), DTypeOf<T>::value, {}};
    auto out = Evaluate(std::span<const TensorSpec>(&spec, 1));
    return out.entries()[0].template values<T>()[0];
  }

  /// Releases transport resources. Idempotent.
  virtual void Close() {}

 protected:
  ModelRunner() = default;

  /// Transport-specific exchange. The result is checked against
  /// `output_specs` by Evaluate().
  virtual FeatureBundle EvaluateUntyped(
      const FeatureBundle& input, std::span<const TensorSpec> output_specs) = 0;

 private:
  FeatureBundle staged_;
};

}  // namespace mlbridge
