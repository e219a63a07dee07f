#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "mlbridge/runner_error.h"

namespace mlbridge {

enum class DType : std::uint8_t { kI64, kF32, kF64, kBool, kStr };

/// Lower-case wire token ("i64", "f32", ...).
std::string_view ToString(DType dtype);
std::optional<DType> ParseDType(std::string_view token);

/// Encoded width of one element, or 0 for the variable-length Str.
std::size_t ElementWidth(DType dtype);

// Element storage type for each dtype. Bool is held as one byte (0 or 1).
template <typename T>
struct DTypeOf;
template <>
struct DTypeOf<std::int64_t> {
  static constexpr DType value = DType::kI64;
  using storage = std::int64_t;
};
template <>
struct DTypeOf<float> {
  static constexpr DType value = DType::kF32;
  using storage = float;
};
template <>
struct DTypeOf<double> {
  static constexpr DType value = DType::kF64;
  using storage = double;
};
template <>
struct DTypeOf<bool> {
  static constexpr DType value = DType::kBool;
  using storage = std::uint8_t;
};
template <>
struct DTypeOf<std::string> {
  static constexpr DType value = DType::kStr;
  using storage = std::string;
};

template <typename T>
using StorageOf = typename DTypeOf<T>::storage;

using Shape = std::vector<std::int64_t>;

struct TensorSpec {
  std::string key;
  DType dtype = DType::kF32;
  Shape shape;  // empty = scalar

  std::size_t element_count() const;

  bool operator==(const TensorSpec&) const = default;
};

/// Throws Malformed unless the key is non-empty and free of control
/// characters, and every dimension is non-negative.
void ValidateSpec(const TensorSpec& spec);

class TensorValue {
 public:
  using Storage =
      std::variant<std::vector<std::int64_t>, std::vector<float>,
                   std::vector<double>, std::vector<std::uint8_t>,
                   std::vector<std::string>>;

  /// Validates the spec and that the data length matches element_count().
  TensorValue(TensorSpec spec, Storage data);

  template <typename T>
  static TensorValue Make(std::string key, Shape shape,
                          std::vector<StorageOf<T>> data) {
    return TensorValue(
        TensorSpec{std::move(key), DTypeOf<T>::value, std::move(shape)},
        Storage(std::move(data)));
  }

  template <typename T>
  static TensorValue Scalar(std::string key, T value) {
    return Make<T>(std::move(key), {},
                   std::vector<StorageOf<T>>{StorageOf<T>(value)});
  }

  template <typename T>
  static TensorValue Vector(std::string key, std::vector<StorageOf<T>> data) {
    const auto n = static_cast<std::int64_t>(data.size());
    return Make<T>(std::move(key), {n}, std::move(data));
  }

  const TensorSpec& spec() const noexcept { return spec_; }
  const std::string& key() const noexcept { return spec_.key; }
  DType dtype() const noexcept { return spec_.dtype; }
  const Shape& shape() const noexcept { return spec_.shape; }
  std::size_t size() const noexcept;

  const Storage& storage() const noexcept { return data_; }

  /// Typed view of the elements. Throws TypeMismatch if T is not the
  /// stored dtype.
  template <typename T>
  std::span<const StorageOf<T>> values() const {
    const auto* v = std::get_if<std::vector<StorageOf<T>>>(&data_);
    if (v == nullptr || dtype() != DTypeOf<T>::value) {
      throw RunnerError::TypeMismatch(key(), DTypeOf<T>::value, dtype());
    }
    return *v;
  }

  /// Bitwise comparison of the data; NaN payloads compare by bits.
  bool operator==(const TensorValue& other) const;

 private:
  TensorSpec spec_;
  Storage data_;
};

/// Ordered, key-unique collection of tensors. Insertion order is the
/// serialization order.
class FeatureBundle {
 public:
  FeatureBundle() = default;

  /// Inserts or replaces in place. `key` must equal value.key().
  void Put(std::string_view key, TensorValue value);
  void Put(TensorValue value);

  /// Throws Malformed if absent, TypeMismatch if the dtype differs.
  const TensorValue& Get(std::string_view key, DType expected) const;
  const TensorValue* Find(std::string_view key) const;
  bool Contains(std::string_view key) const { return Find(key) != nullptr; }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  void Clear() noexcept { entries_.clear(); }

  const std::vector<TensorValue>& entries() const noexcept { return entries_; }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  std::vector<TensorSpec> Specs() const;

  bool operator==(const FeatureBundle&) const = default;

 private:
  std::vector<TensorValue> entries_;
};

/// Reads a numeric tensor of any of I64/F32/F64 as floats.
std::vector<float> ToFloatVector(const TensorValue& value);

/// Reserved Str key carrying a peer-side failure message in a reply.
inline constexpr std::string_view kErrorKey = "__error";

/// Checks a decoded bundle against caller-declared specs key-for-key and
/// returns it in the declared order. A reply carrying kErrorKey that was
/// not declared becomes ModelError; a missing or extra key or a shape
/// difference is Malformed; a dtype difference is TypeMismatch.
FeatureBundle ConformTo(FeatureBundle decoded,
                        std::span<const TensorSpec> expected);

}  // namespace mlbridge
