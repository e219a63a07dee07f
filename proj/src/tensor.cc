#include "mlbridge/tensor.h"

#include <algorithm>
#include <cstring>
#include <limits>

namespace mlbridge {

std::string_view ToString(DType dtype) {
  switch (dtype) {
    case DType::kI64:
      return "i64";
    case DType::kF32:
      return "f32";
    case DType::kF64:
      return "f64";
    case DType::kBool:
      return "bool";
    case DType::kStr:
      return "str";
  }
  return "?";
}

std::optional<DType> ParseDType(std::string_view token) {
  for (auto d : {DType::kI64, DType::kF32, DType::kF64, DType::kBool,
                 DType::kStr}) {
    if (ToString(d) == token) return d;
  }
  return std::nullopt;
}

std::size_t ElementWidth(DType dtype) {
  switch (dtype) {
    case DType::kI64:
    case DType::kF64:
      return 8;
    case DType::kF32:
      return 4;
    case DType::kBool:
      return 1;
    case DType::kStr:
      return 0;
  }
  return 0;
}

std::size_t TensorSpec::element_count() const {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d < 0) throw RunnerError::Malformed("negative dimension in '" + key + "'");
    const auto ud = static_cast<std::size_t>(d);
    if (ud != 0 && n > std::numeric_limits<std::size_t>::max() / ud) {
      throw RunnerError::Malformed("element count overflow in '" + key + "'");
    }
    n *= ud;
  }
  return n;
}

void ValidateSpec(const TensorSpec& spec) {
  if (spec.key.empty()) throw RunnerError::Malformed("empty key");
  for (unsigned char c : spec.key) {
    if (c < 0x20 || c == 0x7f) {
      throw RunnerError::Malformed("control character in key");
    }
  }
  (void)spec.element_count();
}

namespace {

std::size_t StorageSize(const TensorValue::Storage& data) {
  return std::visit([](const auto& v) { return v.size(); }, data);
}

bool StorageMatches(DType dtype, const TensorValue::Storage& data) {
  switch (dtype) {
    case DType::kI64:
      return std::holds_alternative<std::vector<std::int64_t>>(data);
    case DType::kF32:
      return std::holds_alternative<std::vector<float>>(data);
    case DType::kF64:
      return std::holds_alternative<std::vector<double>>(data);
    case DType::kBool:
      return std::holds_alternative<std::vector<std::uint8_t>>(data);
    case DType::kStr:
      return std::holds_alternative<std::vector<std::string>>(data);
  }
  return false;
}

}  // namespace

TensorValue::TensorValue(TensorSpec spec, Storage data)
    : spec_(std::move(spec)), data_(std::move(data)) {
  ValidateSpec(spec_);
  if (!StorageMatches(spec_.dtype, data_)) {
    throw RunnerError::Malformed("storage does not match dtype of '" +
                                 spec_.key + "'");
  }
  if (StorageSize(data_) != spec_.element_count()) {
    throw RunnerError::Malformed("element count mismatch for '" + spec_.key +
                                 "'");
  }
  if (const auto* b = std::get_if<std::vector<std::uint8_t>>(&data_)) {
    if (std::any_of(b->begin(), b->end(), [](auto x) { return x > 1; })) {
      throw RunnerError::Malformed("bool element not 0 or 1 in '" +
                                   spec_.key + "'");
    }
  }
}

std::size_t TensorValue::size() const noexcept { return StorageSize(data_); }

bool TensorValue::operator==(const TensorValue& other) const {
  if (spec_ != other.spec_ || data_.index() != other.data_.index()) {
    return false;
  }
  return std::visit(
      [&](const auto& lhs) {
        using V = std::decay_t<decltype(lhs)>;
        const auto& rhs = std::get<V>(other.data_);
        if constexpr (std::is_same_v<V, std::vector<std::string>>) {
          return lhs == rhs;
        } else {
          return lhs.size() == rhs.size() &&
                 (lhs.empty() ||
                  std::memcmp(lhs.data(), rhs.data(),
                              lhs.size() * sizeof(lhs[0])) == 0);
        }
      },
      data_);
}

void FeatureBundle::Put(std::string_view key, TensorValue value) {
  if (key != value.key()) {
    throw RunnerError::Malformed("key '" + std::string(key) +
                                 "' does not match tensor key '" +
                                 value.key() + "'");
  }
  Put(std::move(value));
}

void FeatureBundle::Put(TensorValue value) {
  ValidateSpec(value.spec());
  for (auto& e : entries_) {
    if (e.key() == value.key()) {
      e = std::move(value);
      return;
    }
  }
  entries_.push_back(std::move(value));
}

const TensorValue* FeatureBundle::Find(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.key() == key) return &e;
  }
  return nullptr;
}

const TensorValue& FeatureBundle::Get(std::string_view key,
                                      DType expected) const {
  const auto* e = Find(key);
  if (e == nullptr) {
    throw RunnerError::Malformed("missing key '" + std::string(key) + "'");
  }
  if (e->dtype() != expected) {
    throw RunnerError::TypeMismatch(std::string(key), expected, e->dtype());
  }
  return *e;
}

std::vector<TensorSpec> FeatureBundle::Specs() const {
  std::vector<TensorSpec> specs;
  specs.reserve(entries_.size());
  for (const auto& e : entries_) specs.push_back(e.spec());
  return specs;
}

std::vector<float> ToFloatVector(const TensorValue& value) {
  return std::visit(
      [&](const auto& v) -> std::vector<float> {
        using E = typename std::decay_t<decltype(v)>::value_type;
        if constexpr (std::is_same_v<E, std::string> ||
                      std::is_same_v<E, std::uint8_t>) {
          throw RunnerError::TypeMismatch(value.key(), DType::kF32,
                                          value.dtype());
        } else {
          return std::vector<float>(v.begin(), v.end());
        }
      },
      value.storage());
}

FeatureBundle ConformTo(FeatureBundle decoded,
                        std::span<const TensorSpec> expected) {
  const bool error_declared =
      std::any_of(expected.begin(), expected.end(),
                  [](const TensorSpec& s) { return s.key == kErrorKey; });
  if (!error_declared) {
    if (const auto* err = decoded.Find(kErrorKey)) {
      std::string message = "peer reported an error";
      if (err->dtype() == DType::kStr && err->size() > 0) {
        message = err->values<std::string>()[0];
      }
      throw RunnerError::ModelError(std::move(message));
    }
  }
  FeatureBundle out;
  for (const auto& spec : expected) {
    const auto& value = decoded.Get(spec.key, spec.dtype);
    if (value.shape() != spec.shape) {
      throw RunnerError::Malformed("shape mismatch for '" + spec.key + "'");
    }
    out.Put(value);
  }
  if (out.size() != decoded.size()) {
    for (const auto& e : decoded) {
      if (!out.Contains(e.key())) {
        throw RunnerError::Malformed("unexpected key '" + e.key() + "'");
      }
    }
    throw RunnerError::Malformed("duplicate expected key");
  }
  return out;
}

}  // namespace mlbridge
