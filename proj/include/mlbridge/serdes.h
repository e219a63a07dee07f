#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mlbridge/tensor.h"

namespace mlbridge {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

enum class SerDesKind { kJson, kBitstream, kTaggedBinary };

std::string_view ToString(SerDesKind kind);
/// Accepts "json", "bitstream" and "tagged" (also "tagged_binary").
std::optional<SerDesKind> ParseSerDesKind(std::string_view token);

using ExpectedSpecs = std::optional<std::vector<TensorSpec>>;

/// Common interface of the three wire formats.
///
/// Json: one object mapping key to scalar or nested row-major array, in
/// bundle order. Numbers use the shortest decimal that round-trips the
/// value as a double; F32 is widened first.
///
/// Bitstream: a single-line JSON header
///   {"features":[{"key":..,"dtype":..,"shape":[..]},...]}
/// terminated by LF, then each tensor's raw little-endian element bytes in
/// header order with no padding.
///
/// TaggedBinary: per tensor, a tag byte (1=i64 2=f32 3=f64 4=bool 5=str),
/// u16 LE key length, key bytes, u8 rank, rank x u32 LE dims, raw elements.
///
/// In both binary formats a Str element is a u32 LE byte length followed by
/// its UTF-8 bytes.
class SerDes {
 public:
  virtual ~SerDes() = default;

  virtual SerDesKind kind() const = 0;
  virtual Bytes Serialize(const FeatureBundle& bundle) const = 0;
  /// `expected`, when given, is enforced through ConformTo. Json needs it
  /// to tell I64, F32 and F64 apart; without it integers decode as I64 and
  /// other numbers as F64.
  virtual FeatureBundle Deserialize(ByteView bytes,
                                    const ExpectedSpecs& expected) const = 0;
  virtual std::size_t PayloadSize(const FeatureBundle& bundle) const;
};

std::unique_ptr<SerDes> MakeSerDes(SerDesKind kind);
const SerDes& GetSerDes(SerDesKind kind);

Bytes Serialize(SerDesKind kind, const FeatureBundle& bundle);
FeatureBundle Deserialize(SerDesKind kind, ByteView bytes,
                          const ExpectedSpecs& expected = std::nullopt);
std::size_t PayloadSize(SerDesKind kind, const FeatureBundle& bundle);

/// Throws Malformed if `text` is not well-formed UTF-8.
void ValidateUtf8(std::string_view text);

}  // namespace mlbridge
