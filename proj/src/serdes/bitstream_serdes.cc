#include <algorithm>
#include <string>

#include "json.hpp"

#include "serdes/formats.h"
#include "serdes/wire_io.h"

namespace mlbridge {
namespace {

using Json = nlohmann::ordered_json;

std::string EncodeHeader(const FeatureBundle& bundle) {
  Json features = Json::array();
  for (const auto& e : bundle) {
    ValidateUtf8(e.key());
    Json f;
    f["key"] = e.key();
    f["dtype"] = std::string(ToString(e.dtype()));
    f["shape"] = e.shape();
    features.push_back(std::move(f));
  }
  Json header;
  header["features"] = std::move(features);
  return header.dump();
}

std::vector<TensorSpec> DecodeHeader(std::string_view line) {
  Json header;
  try {
    header = Json::parse(line);
  } catch (const Json::exception& e) {
    throw RunnerError::Malformed(std::string("bad header json: ") + e.what());
  }
  if (!header.is_object() || !header.contains("features") ||
      !header["features"].is_array()) {
    throw RunnerError::Malformed("bad header: missing features array");
  }
  std::vector<TensorSpec> specs;
  for (const auto& f : header["features"]) {
    if (!f.is_object() || !f.contains("key") || !f["key"].is_string() ||
        !f.contains("dtype") || !f["dtype"].is_string() ||
        !f.contains("shape") || !f["shape"].is_array()) {
      throw RunnerError::Malformed("bad header: malformed feature entry");
    }
    TensorSpec spec;
    spec.key = f["key"].get<std::string>();
    const auto dtype = ParseDType(f["dtype"].get<std::string>());
    if (!dtype) throw RunnerError::Malformed("bad header: unknown dtype");
    spec.dtype = *dtype;
    for (const auto& d : f["shape"]) {
      if (!d.is_number_integer() || d.get<std::int64_t>() < 0) {
        throw RunnerError::Malformed("bad header: invalid dimension");
      }
      spec.shape.push_back(d.get<std::int64_t>());
    }
    ValidateSpec(spec);
    if (std::any_of(specs.begin(), specs.end(),
                    [&](const TensorSpec& s) { return s.key == spec.key; })) {
      throw RunnerError::Malformed("duplicate key '" + spec.key + "'");
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

}  // namespace

Bytes BitstreamSerDes::Serialize(const FeatureBundle& bundle) const {
  const std::string header = EncodeHeader(bundle);
  Bytes out;
  std::size_t total = header.size() + 1;
  for (const auto& e : bundle) total += wire::ElementBytes(e);
  out.reserve(total);
  wire::Writer w(out);
  w.PutString(header);
  w.Put(std::uint8_t{'\n'});
  for (const auto& e : bundle) wire::WriteElements(w, e);
  return out;
}

FeatureBundle BitstreamSerDes::Deserialize(
    ByteView bytes, const ExpectedSpecs& expected) const {
  const auto lf = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (lf == bytes.end()) {
    throw RunnerError::Malformed("truncated payload: missing header line");
  }
  const auto header_len = static_cast<std::size_t>(lf - bytes.begin());
  const auto specs = DecodeHeader(std::string_view(
      reinterpret_cast<const char*>(bytes.data()), header_len));

  wire::Reader r(bytes.subspan(header_len + 1));
  FeatureBundle bundle;
  for (const auto& spec : specs) bundle.Put(wire::ReadElements(r, spec));
  if (!r.done()) throw RunnerError::Malformed("trailing bytes after payload");
  if (expected) return ConformTo(std::move(bundle), *expected);
  return bundle;
}

std::size_t BitstreamSerDes::PayloadSize(const FeatureBundle& bundle) const {
  std::size_t n = EncodeHeader(bundle).size() + 1;
  for (const auto& e : bundle) n += wire::ElementBytes(e);
  return n;
}

}  // namespace mlbridge
