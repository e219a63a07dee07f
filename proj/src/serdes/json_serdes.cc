#include <cmath>
#include <string>

#include "json.hpp"

#include "serdes/formats.h"

namespace mlbridge {
namespace {

using Json = nlohmann::ordered_json;

template <typename E>
Json EncodeLeaf(const E& v, const std::string& key) {
  if constexpr (std::is_same_v<E, std::uint8_t>) {
    return Json(v != 0);
  } else if constexpr (std::is_same_v<E, std::string>) {
    ValidateUtf8(v);
    return Json(v);
  } else if constexpr (std::is_floating_point_v<E>) {
    if (!std::isfinite(v)) {
      throw RunnerError::Malformed("non-finite value in '" + key +
                                   "' is not representable in json");
    }
    return Json(static_cast<double>(v));
  } else {
    return Json(v);
  }
}

// Row-major nesting of data[offset, offset + prod(shape[dim:])).
template <typename E>
Json EncodeNested(const std::vector<E>& data, const Shape& shape,
                  std::size_t dim, std::size_t& offset,
                  const std::string& key) {
  if (dim == shape.size()) return EncodeLeaf(data[offset++], key);
  Json arr = Json::array();
  const auto n = static_cast<std::size_t>(shape[dim]);
  arr.get_ref<Json::array_t&>().reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    arr.push_back(EncodeNested(data, shape, dim + 1, offset, key));
  }
  return arr;
}

DType LeafDType(const Json& leaf) {
  if (leaf.is_boolean()) return DType::kBool;
  if (leaf.is_string()) return DType::kStr;
  if (leaf.is_number_float()) return DType::kF64;
  if (leaf.is_number()) return DType::kI64;
  throw RunnerError::Malformed("unsupported json leaf");
}

// Shape implied by the first element at every depth. Rectangularity is
// checked while flattening.
Shape InferShape(const Json& value) {
  Shape shape;
  const Json* cur = &value;
  while (cur->is_array()) {
    shape.push_back(static_cast<std::int64_t>(cur->size()));
    if (cur->empty()) break;
    cur = &(*cur)[0];
  }
  return shape;
}

DType InferDType(const Json& value) {
  const Json* cur = &value;
  while (cur->is_array()) {
    if (cur->empty()) return DType::kF64;
    cur = &(*cur)[0];
  }
  const DType first = LeafDType(*cur);
  if (first != DType::kI64) return first;
  // Integers only stay I64 if no leaf is a float.
  bool any_float = false;
  auto visit = [&](const Json& v, auto&& self) -> void {
    if (v.is_array()) {
      for (const auto& x : v) self(x, self);
    } else if (v.is_number_float()) {
      any_float = true;
    }
  };
  visit(value, visit);
  return any_float ? DType::kF64 : DType::kI64;
}

template <typename E>
void Flatten(const Json& value, const Shape& shape, std::size_t dim,
             const TensorSpec& spec, std::vector<E>& out) {
  if (dim == shape.size()) {
    if (value.is_array()) {
      throw RunnerError::Malformed("shape mismatch for '" + spec.key + "'");
    }
    if (value.is_null() || value.is_object()) {
      throw RunnerError::Malformed("unsupported json leaf in '" + spec.key +
                                   "'");
    }
    const DType found = LeafDType(value);
    if constexpr (std::is_same_v<E, std::uint8_t>) {
      if (found != DType::kBool) {
        throw RunnerError::TypeMismatch(spec.key, spec.dtype, found);
      }
      out.push_back(value.get<bool>() ? 1 : 0);
    } else if constexpr (std::is_same_v<E, std::string>) {
      if (found != DType::kStr) {
        throw RunnerError::TypeMismatch(spec.key, spec.dtype, found);
      }
      out.push_back(value.get<std::string>());
    } else if constexpr (std::is_same_v<E, std::int64_t>) {
      if (found != DType::kI64) {
        throw RunnerError::TypeMismatch(spec.key, spec.dtype, found);
      }
      if (value.is_number_unsigned() &&
          value.get<std::uint64_t>() >
              static_cast<std::uint64_t>(
                  std::numeric_limits<std::int64_t>::max())) {
        throw RunnerError::Malformed("integer out of range in '" + spec.key +
                                     "'");
      }
      out.push_back(value.get<std::int64_t>());
    } else {
      if (found != DType::kI64 && found != DType::kF64) {
        throw RunnerError::TypeMismatch(spec.key, spec.dtype, found);
      }
      out.push_back(static_cast<E>(value.get<double>()));
    }
    return;
  }
  if (!value.is_array() ||
      value.size() != static_cast<std::size_t>(shape[dim])) {
    throw RunnerError::Malformed("shape mismatch for '" + spec.key + "'");
  }
  for (const auto& x : value) Flatten(x, shape, dim + 1, spec, out);
}

template <typename E>
TensorValue Decode(const Json& value, TensorSpec spec) {
  std::vector<E> out;
  out.reserve(spec.element_count());
  Flatten(value, spec.shape, 0, spec, out);
  return TensorValue(std::move(spec), std::move(out));
}

TensorValue DecodeEntry(const std::string& key, const Json& value,
                        const TensorSpec* declared) {
  TensorSpec spec;
  spec.key = key;
  if (declared != nullptr) {
    spec.dtype = declared->dtype;
    spec.shape = declared->shape;
  } else {
    spec.dtype = InferDType(value);
    spec.shape = InferShape(value);
  }
  ValidateSpec(spec);
  switch (spec.dtype) {
    case DType::kI64:
      return Decode<std::int64_t>(value, std::move(spec));
    case DType::kF32:
      return Decode<float>(value, std::move(spec));
    case DType::kF64:
      return Decode<double>(value, std::move(spec));
    case DType::kBool:
      return Decode<std::uint8_t>(value, std::move(spec));
    case DType::kStr:
      return Decode<std::string>(value, std::move(spec));
  }
  throw RunnerError::Malformed("unknown dtype");
}

}  // namespace

Bytes JsonSerDes::Serialize(const FeatureBundle& bundle) const {
  Json doc = Json::object();
  for (const auto& e : bundle) {
    ValidateUtf8(e.key());
    std::visit(
        [&](const auto& v) {
          std::size_t offset = 0;
          doc[e.key()] = EncodeNested(v, e.shape(), 0, offset, e.key());
        },
        e.storage());
  }
  const std::string text = doc.dump();
  return Bytes(text.begin(), text.end());
}

FeatureBundle JsonSerDes::Deserialize(ByteView bytes,
                                      const ExpectedSpecs& expected) const {
  Json doc;
  try {
    doc = Json::parse(bytes.begin(), bytes.end());
  } catch (const Json::exception& e) {
    throw RunnerError::Malformed(std::string("bad json: ") + e.what());
  }
  if (!doc.is_object()) throw RunnerError::Malformed("json root is not an object");

  FeatureBundle bundle;
  for (const auto& [key, value] : doc.items()) {
    const TensorSpec* declared = nullptr;
    if (expected) {
      for (const auto& s : *expected) {
        if (s.key == key) {
          declared = &s;
          break;
        }
      }
    }
    bundle.Put(DecodeEntry(key, value, declared));
  }
  if (expected) return ConformTo(std::move(bundle), *expected);
  return bundle;
}

}  // namespace mlbridge
