#include <limits>
#include <string>

#include "serdes/formats.h"
#include "serdes/wire_io.h"

namespace mlbridge {
namespace {

std::uint8_t TagOf(DType dtype) {
  switch (dtype) {
    case DType::kI64:
      return 1;
    case DType::kF32:
      return 2;
    case DType::kF64:
      return 3;
    case DType::kBool:
      return 4;
    case DType::kStr:
      return 5;
  }
  return 0;
}

DType DTypeOfTag(std::uint8_t tag) {
  switch (tag) {
    case 1:
      return DType::kI64;
    case 2:
      return DType::kF32;
    case 3:
      return DType::kF64;
    case 4:
      return DType::kBool;
    case 5:
      return DType::kStr;
    default:
      throw RunnerError::Malformed("unknown tag " + std::to_string(tag));
  }
}

void CheckEncodable(const TensorValue& e) {
  ValidateUtf8(e.key());
  if (e.key().size() > std::numeric_limits<std::uint16_t>::max()) {
    throw RunnerError::Malformed("key too long for tagged binary");
  }
  if (e.shape().size() > std::numeric_limits<std::uint8_t>::max()) {
    throw RunnerError::Malformed("rank too large for tagged binary");
  }
  for (auto d : e.shape()) {
    if (d > std::numeric_limits<std::uint32_t>::max()) {
      throw RunnerError::Malformed("dimension too large for tagged binary");
    }
  }
}

}  // namespace

Bytes TaggedBinarySerDes::Serialize(const FeatureBundle& bundle) const {
  Bytes out;
  out.reserve(PayloadSize(bundle));
  wire::Writer w(out);
  for (const auto& e : bundle) {
    CheckEncodable(e);
    w.Put(TagOf(e.dtype()));
    w.Put(static_cast<std::uint16_t>(e.key().size()));
    w.PutString(e.key());
    w.Put(static_cast<std::uint8_t>(e.shape().size()));
    for (auto d : e.shape()) w.Put(static_cast<std::uint32_t>(d));
    wire::WriteElements(w, e);
  }
  return out;
}

FeatureBundle TaggedBinarySerDes::Deserialize(
    ByteView bytes, const ExpectedSpecs& expected) const {
  wire::Reader r(bytes);
  FeatureBundle bundle;
  while (!r.done()) {
    TensorSpec spec;
    spec.dtype = DTypeOfTag(r.Get<std::uint8_t>());
    spec.key = r.GetString(r.Get<std::uint16_t>());
    ValidateUtf8(spec.key);
    const auto rank = r.Get<std::uint8_t>();
    for (unsigned i = 0; i < rank; ++i) {
      spec.shape.push_back(r.Get<std::uint32_t>());
    }
    if (bundle.Contains(spec.key)) {
      throw RunnerError::Malformed("duplicate key '" + spec.key + "'");
    }
    bundle.Put(wire::ReadElements(r, std::move(spec)));
  }
  if (expected) return ConformTo(std::move(bundle), *expected);
  return bundle;
}

std::size_t TaggedBinarySerDes::PayloadSize(const FeatureBundle& bundle) const {
  std::size_t n = 0;
  for (const auto& e : bundle) {
    n += 1 + 2 + e.key().size() + 1 + 4 * e.shape().size() +
         wire::ElementBytes(e);
  }
  return n;
}

}  // namespace mlbridge
