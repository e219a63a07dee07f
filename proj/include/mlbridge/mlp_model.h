#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "mlbridge/serdes.h"

namespace mlbridge {

enum class Activation { kIdentity, kRelu };

std::string_view ToString(Activation activation);

struct DenseLayer {
  std::int64_t rows = 0;
  std::int64_t cols = 0;
  std::vector<float> weights;  // rows x cols, row-major
  std::vector<float> bias;     // rows
  Activation activation = Activation::kIdentity;
};

/// Immutable feed-forward network of dense layers. Safe to share across
/// threads after construction.
class MlpModel {
 public:
  /// Throws Malformed on a broken dimension chain or buffer sizes, and
  /// ModelError on non-finite parameters.
  MlpModel(std::int64_t input_dim, std::vector<DenseLayer> layers);

  std::int64_t input_dim() const noexcept { return input_dim_; }
  std::int64_t output_dim() const noexcept { return layers_.back().rows; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  /// y0 = input; yk = act(Wk * y(k-1) + bk). Intermediate values are kept in
  /// double and the final layer is rounded to float. Malformed on an input
  /// length other than input_dim().
  std::vector<float> Forward(std::span<const float> input) const;

 private:
  std::int64_t input_dim_;
  std::vector<DenseLayer> layers_;
};

/// Model file: a one-line JSON manifest
///   {"input_dim":N,"layers":[{"rows":R,"cols":C,"activation":"relu"},...]}
/// terminated by LF, followed for each layer by its weights (row-major) then
/// its bias, as little-endian f32 with nothing after.
MlpModel LoadModel(ByteView bytes);
MlpModel LoadModelFile(const std::filesystem::path& path);
Bytes EncodeModel(const MlpModel& model);
void SaveModelFile(const MlpModel& model, const std::filesystem::path& path);

/// Index of the largest output; ties go to the lowest index.
std::int64_t AgentAct(const MlpModel& model, std::span<const float> observation);

/// Seeded model with `dims` = {input, hidden..., output}. Weights are uniform
/// in +-1/sqrt(cols), biases in +-0.1. Hidden layers use `hidden`, the last
/// layer is identity.
MlpModel MakeRandomModel(std::span<const std::int64_t> dims,
                         std::uint64_t seed,
                         Activation hidden = Activation::kRelu);

}  // namespace mlbridge
