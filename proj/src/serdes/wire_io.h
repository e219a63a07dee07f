#pragma once

// Little-endian byte writer/reader shared by the binary wire formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <limits>
#include <string>
#include <string_view>
#include <type_traits>

#include "mlbridge/serdes.h"

namespace mlbridge::wire {

static_assert(std::numeric_limits<float>::is_iec559);
static_assert(std::numeric_limits<double>::is_iec559);

template <typename U>
U ByteSwapIfBig(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out = static_cast<U>((out << 8) | (v & 0xff));
      v = static_cast<U>(v >> 8);
    }
    return out;
  } else {
    return v;
  }
}

template <typename T>
using UIntOf = std::conditional_t<
    sizeof(T) == 1, std::uint8_t,
    std::conditional_t<sizeof(T) == 2, std::uint16_t,
                       std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                          std::uint64_t>>>;

class Writer {
 public:
  explicit Writer(Bytes& out) : out_(out) {}

  template <typename T>
  void Put(T v) {
    static_assert(std::is_arithmetic_v<T>);
    const auto u = ByteSwapIfBig(std::bit_cast<UIntOf<T>>(v));
    const auto at = out_.size();
    out_.resize(at + sizeof(T));
    std::memcpy(out_.data() + at, &u, sizeof(T));
  }

  void PutBytes(const void* data, std::size_t n) {
    const auto at = out_.size();
    out_.resize(at + n);
    if (n != 0) std::memcpy(out_.data() + at, data, n);
  }

  void PutString(std::string_view s) { PutBytes(s.data(), s.size()); }

  template <typename T>
  void PutArray(const T* data, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      PutBytes(data, n * sizeof(T));
    } else {
      for (std::size_t i = 0; i < n; ++i) Put(data[i]);
    }
  }

 private:
  Bytes& out_;
};

class Reader {
 public:
  explicit Reader(ByteView in) : in_(in) {}

  std::size_t remaining() const noexcept { return in_.size() - pos_; }
  bool done() const noexcept { return pos_ == in_.size(); }

  const std::uint8_t* Take(std::size_t n) {
    if (n > remaining()) throw RunnerError::Malformed("truncated payload");
    const auto* p = in_.data() + pos_;
    pos_ += n;
    return p;
  }

  template <typename T>
  T Get() {
    UIntOf<T> u;
    std::memcpy(&u, Take(sizeof(T)), sizeof(T));
    return std::bit_cast<T>(ByteSwapIfBig(u));
  }

  std::string GetString(std::size_t n) {
    const auto* p = Take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }

  template <typename T>
  void GetArray(T* out, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
      if (n > remaining() / sizeof(T)) {
        throw RunnerError::Malformed("truncated payload");
      }
      if (n != 0) std::memcpy(out, Take(n * sizeof(T)), n * sizeof(T));
    } else {
      for (std::size_t i = 0; i < n; ++i) out[i] = Get<T>();
    }
  }

 private:
  ByteView in_;
  std::size_t pos_ = 0;
};

/// Raw element section shared by Bitstream and TaggedBinary.
void WriteElements(Writer& w, const TensorValue& value);
TensorValue ReadElements(Reader& r, TensorSpec spec);
/// Byte length WriteElements would produce.
std::size_t ElementBytes(const TensorValue& value);

}  // namespace mlbridge::wire
