#include "mlbridge/mlp_model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "json.hpp"

#include "serdes/wire_io.h"

namespace mlbridge {

std::string_view ToString(Activation activation) {
  return activation == Activation::kRelu ? "relu" : "identity";
}

MlpModel::MlpModel(std::int64_t input_dim, std::vector<DenseLayer> layers)
    : input_dim_(input_dim), layers_(std::move(layers)) {
  if (input_dim_ < 1) throw RunnerError::Malformed("input_dim must be >= 1");
  if (layers_.empty()) throw RunnerError::Malformed("model has no layers");
  std::int64_t prev = input_dim_;
  for (const auto& layer : layers_) {
    if (layer.rows < 1 || layer.cols < 1) {
      throw RunnerError::Malformed("layer dimensions must be >= 1");
    }
    if (layer.cols != prev) {
      throw RunnerError::Malformed(
          "dimension mismatch: layer expects " + std::to_string(layer.cols) +
          " inputs, previous stage yields " + std::to_string(prev));
    }
    if (layer.weights.size() !=
            static_cast<std::size_t>(layer.rows * layer.cols) ||
        layer.bias.size() != static_cast<std::size_t>(layer.rows)) {
      throw RunnerError::Malformed("layer buffer size mismatch");
    }
    auto finite = [](float v) { return std::isfinite(v); };
    if (!std::all_of(layer.weights.begin(), layer.weights.end(), finite) ||
        !std::all_of(layer.bias.begin(), layer.bias.end(), finite)) {
      throw RunnerError::ModelError("non-finite model parameter");
    }
    prev = layer.rows;
  }
}

std::vector<float> MlpModel::Forward(std::span<const float> input) const {
  if (static_cast<std::int64_t>(input.size()) != input_dim_) {
    throw RunnerError::Malformed("input length " +
                                 std::to_string(input.size()) +
                                 " != input_dim " + std::to_string(input_dim_));
  }
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> next;
  for (const auto& layer : layers_) {
    const auto cols = static_cast<std::size_t>(layer.cols);
    next.assign(static_cast<std::size_t>(layer.rows), 0.0);
    for (std::size_t r = 0; r < next.size(); ++r) {
      const float* w = layer.weights.data() + r * cols;
      double acc = layer.bias[r];
      for (std::size_t c = 0; c < cols; ++c) {
        acc += static_cast<double>(w[c]) * cur[c];
      }
      if (layer.activation == Activation::kRelu && acc < 0.0) acc = 0.0;
      next[r] = acc;
    }
    cur.swap(next);
  }
  return std::vector<float>(cur.begin(), cur.end());
}

std::int64_t AgentAct(const MlpModel& model,
                      std::span<const float> observation) {
  const auto logits = model.Forward(observation);
  // max_element returns the first maximum.
  return std::max_element(logits.begin(), logits.end()) - logits.begin();
}

namespace {

using Json = nlohmann::ordered_json;

std::int64_t RequireInt(const Json& obj, const char* field) {
  if (!obj.is_object() || !obj.contains(field) ||
      !obj[field].is_number_integer()) {
    throw RunnerError::Malformed(std::string("manifest: missing integer '") +
                                 field + "'");
  }
  return obj[field].get<std::int64_t>();
}

}  // namespace

MlpModel LoadModel(ByteView bytes) {
  const auto lf = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (lf == bytes.end()) throw RunnerError::Malformed("truncated: no manifest");
  Json manifest;
  try {
    manifest = Json::parse(bytes.begin(), lf);
  } catch (const Json::exception& e) {
    throw RunnerError::Malformed(std::string("manifest: ") + e.what());
  }
  const auto input_dim = RequireInt(manifest, "input_dim");
  if (!manifest.contains("layers") || !manifest["layers"].is_array()) {
    throw RunnerError::Malformed("manifest: missing 'layers'");
  }

  std::vector<DenseLayer> layers;
  std::size_t expected_bytes = 0;
  std::int64_t prev = input_dim;
  for (const auto& spec : manifest["layers"]) {
    DenseLayer layer;
    layer.rows = RequireInt(spec, "rows");
    layer.cols = RequireInt(spec, "cols");
    if (layer.rows < 1 || layer.cols < 1 || layer.rows > (1 << 24) ||
        layer.cols > (1 << 24)) {
      throw RunnerError::Malformed("manifest: layer dimension out of range");
    }
    if (layer.cols != prev) {
      throw RunnerError::Malformed("dimension mismatch: cols " +
                                   std::to_string(layer.cols) +
                                   " != previous rows " + std::to_string(prev));
    }
    prev = layer.rows;
    const std::string act =
        spec.contains("activation") && spec["activation"].is_string()
            ? spec["activation"].get<std::string>()
            : "";
    if (act == "identity") {
      layer.activation = Activation::kIdentity;
    } else if (act == "relu") {
      layer.activation = Activation::kRelu;
    } else {
      throw RunnerError::Malformed("manifest: unknown activation '" + act + "'");
    }
    expected_bytes += 4 * static_cast<std::size_t>(layer.rows * layer.cols +
                                                   layer.rows);
    layers.push_back(std::move(layer));
  }

  const ByteView body = bytes.subspan(
      static_cast<std::size_t>(lf - bytes.begin()) + 1);
  if (body.size() < expected_bytes) {
    throw RunnerError::Malformed("truncated: expected " +
                                 std::to_string(expected_bytes) +
                                 " parameter bytes, got " +
                                 std::to_string(body.size()));
  }
  if (body.size() > expected_bytes) {
    throw RunnerError::Malformed("trailing bytes after parameters");
  }
  wire::Reader r(body);
  for (auto& layer : layers) {
    layer.weights.resize(static_cast<std::size_t>(layer.rows * layer.cols));
    layer.bias.resize(static_cast<std::size_t>(layer.rows));
    r.GetArray(layer.weights.data(), layer.weights.size());
    r.GetArray(layer.bias.data(), layer.bias.size());
  }
  return MlpModel(input_dim, std::move(layers));
}

MlpModel LoadModelFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RunnerError::Malformed("cannot open model " + path.string());
  const Bytes bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return LoadModel(bytes);
}

Bytes EncodeModel(const MlpModel& model) {
  Json manifest;
  manifest["input_dim"] = model.input_dim();
  Json layers = Json::array();
  for (const auto& layer : model.layers()) {
    Json l;
    l["rows"] = layer.rows;
    l["cols"] = layer.cols;
    l["activation"] = std::string(ToString(layer.activation));
    layers.push_back(std::move(l));
  }
  manifest["layers"] = std::move(layers);

  Bytes out;
  wire::Writer w(out);
  w.PutString(manifest.dump());
  w.Put(std::uint8_t{'\n'});
  for (const auto& layer : model.layers()) {
    w.PutArray(layer.weights.data(), layer.weights.size());
    w.PutArray(layer.bias.data(), layer.bias.size());
  }
  return out;
}

void SaveModelFile(const MlpModel& model, const std::filesystem::path& path) {
  const Bytes bytes = EncodeModel(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw RunnerError::Malformed("cannot write model " + path.string());
}

MlpModel MakeRandomModel(std::span<const std::int64_t> dims, std::uint64_t seed,
                         Activation hidden) {
  if (dims.size() < 2) {
    throw RunnerError::Malformed("need at least input and output dims");
  }
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 1; i < dims.size(); ++i) {
    DenseLayer layer;
    layer.cols = dims[i - 1];
    layer.rows = dims[i];
    if (layer.rows < 1 || layer.cols < 1) {
      throw RunnerError::Malformed("layer dimensions must be >= 1");
    }
    layer.activation = i + 1 == dims.size() ? Activation::kIdentity : hidden;
    const float scale = 1.0f / std::sqrt(static_cast<float>(layer.cols));
    std::uniform_real_distribution<float> w(-scale, scale);
    std::uniform_real_distribution<float> b(-0.1f, 0.1f);
    layer.weights.resize(static_cast<std::size_t>(layer.rows * layer.cols));
    for (auto& x : layer.weights) x = w(rng);
    layer.bias.resize(static_cast<std::size_t>(layer.rows));
    for (auto& x : layer.bias) x = b(rng);
    layers.push_back(std::move(layer));
  }
  return MlpModel(dims[0], std::move(layers));
}

}  // namespace mlbridge
