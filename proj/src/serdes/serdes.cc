#include "mlbridge/serdes.h"

#include "serdes/formats.h"
#include "serdes/wire_io.h"

namespace mlbridge {

std::string_view ToString(SerDesKind kind) {
  switch (kind) {
    case SerDesKind::kJson:
      return "json";
    case SerDesKind::kBitstream:
      return "bitstream";
    case SerDesKind::kTaggedBinary:
      return "tagged";
  }
  return "?";
}

std::optional<SerDesKind> ParseSerDesKind(std::string_view token) {
  if (token == "json") return SerDesKind::kJson;
  if (token == "bitstream") return SerDesKind::kBitstream;
  if (token == "tagged" || token == "tagged_binary") {
    return SerDesKind::kTaggedBinary;
  }
  return std::nullopt;
}

std::size_t SerDes::PayloadSize(const FeatureBundle& bundle) const {
  return Serialize(bundle).size();
}

std::unique_ptr<SerDes> MakeSerDes(SerDesKind kind) {
  switch (kind) {
    case SerDesKind::kJson:
      return std::make_unique<JsonSerDes>();
    case SerDesKind::kBitstream:
      return std::make_unique<BitstreamSerDes>();
    case SerDesKind::kTaggedBinary:
      return std::make_unique<TaggedBinarySerDes>();
  }
  throw RunnerError::Malformed("unknown serdes kind");
}

const SerDes& GetSerDes(SerDesKind kind) {
  static const JsonSerDes json;
  static const BitstreamSerDes bitstream;
  static const TaggedBinarySerDes tagged;
  switch (kind) {
    case SerDesKind::kJson:
      return json;
    case SerDesKind::kBitstream:
      return bitstream;
    case SerDesKind::kTaggedBinary:
      return tagged;
  }
  throw RunnerError::Malformed("unknown serdes kind");
}

Bytes Serialize(SerDesKind kind, const FeatureBundle& bundle) {
  return GetSerDes(kind).Serialize(bundle);
}

FeatureBundle Deserialize(SerDesKind kind, ByteView bytes,
                          const ExpectedSpecs& expected) {
  return GetSerDes(kind).Deserialize(bytes, expected);
}

std::size_t PayloadSize(SerDesKind kind, const FeatureBundle& bundle) {
  return GetSerDes(kind).PayloadSize(bundle);
}

void ValidateUtf8(std::string_view text) {
  const auto* s = reinterpret_cast<const unsigned char*>(text.data());
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const unsigned c = s[i];
    if (c < 0x80) {
      ++i;
      continue;
    }
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if ((c & 0xe0) == 0xc0) {
      len = 2;
      cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
      len = 3;
      cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
      len = 4;
      cp = c & 0x07;
    } else {
      throw RunnerError::Malformed("invalid UTF-8 lead byte");
    }
    if (i + len > n) throw RunnerError::Malformed("truncated UTF-8 sequence");
    for (std::size_t k = 1; k < len; ++k) {
      if ((s[i + k] & 0xc0) != 0x80) {
        throw RunnerError::Malformed("invalid UTF-8 continuation byte");
      }
      cp = (cp << 6) | (s[i + k] & 0x3f);
    }
    static constexpr std::uint32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) {
      throw RunnerError::Malformed("invalid UTF-8 code point");
    }
    i += len;
  }
}

namespace wire {

void WriteElements(Writer& w, const TensorValue& value) {
  std::visit(
      [&](const auto& v) {
        using E = typename std::decay_t<decltype(v)>::value_type;
        if constexpr (std::is_same_v<E, std::string>) {
          for (const auto& s : v) {
            ValidateUtf8(s);
            if (s.size() > std::numeric_limits<std::uint32_t>::max()) {
              throw RunnerError::Malformed("string element too long");
            }
            w.Put(static_cast<std::uint32_t>(s.size()));
            w.PutString(s);
          }
        } else {
          w.PutArray(v.data(), v.size());
        }
      },
      value.storage());
}

std::size_t ElementBytes(const TensorValue& value) {
  return std::visit(
      [](const auto& v) -> std::size_t {
        using E = typename std::decay_t<decltype(v)>::value_type;
        if constexpr (std::is_same_v<E, std::string>) {
          std::size_t n = 0;
          for (const auto& s : v) n += 4 + s.size();
          return n;
        } else {
          return v.size() * sizeof(E);
        }
      },
      value.storage());
}

namespace {

template <typename E>
TensorValue::Storage ReadFixed(Reader& r, std::size_t count) {
  if (count > r.remaining() / sizeof(E)) {
    throw RunnerError::Malformed("truncated payload");
  }
  std::vector<E> out(count);
  r.GetArray(out.data(), count);
  return out;
}

}  // namespace

TensorValue ReadElements(Reader& r, TensorSpec spec) {
  ValidateSpec(spec);
  const std::size_t count = spec.element_count();
  TensorValue::Storage data;
  switch (spec.dtype) {
    case DType::kI64:
      data = ReadFixed<std::int64_t>(r, count);
      break;
    case DType::kF32:
      data = ReadFixed<float>(r, count);
      break;
    case DType::kF64:
      data = ReadFixed<double>(r, count);
      break;
    case DType::kBool: {
      data = ReadFixed<std::uint8_t>(r, count);
      for (auto b : std::get<std::vector<std::uint8_t>>(data)) {
        if (b > 1) throw RunnerError::Malformed("bool element not 0 or 1");
      }
      break;
    }
    case DType::kStr: {
      if (count > r.remaining() / 4) {
        throw RunnerError::Malformed("truncated payload");
      }
      std::vector<std::string> strs;
      strs.reserve(count);
      for (std::size_t i = 0; i < count; ++i) {
        const auto len = r.Get<std::uint32_t>();
        auto s = r.GetString(len);
        ValidateUtf8(s);
        strs.push_back(std::move(s));
      }
      data = std::move(strs);
      break;
    }
  }
  return TensorValue(std::move(spec), std::move(data));
}

}  // namespace wire
}  // namespace mlbridge
