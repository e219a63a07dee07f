#include <cmath>
#include <cstring>

#include "test_util.h"

namespace mlbridge {
namespace {

using testing::RandomBundle;
using testing::RoundTrip;
using testing::ToBytes;

constexpr SerDesKind kAllKinds[] = {SerDesKind::kJson, SerDesKind::kBitstream,
                                    SerDesKind::kTaggedBinary};

// IEEE-754 binary32 bits of a normal or zero float, assembled from frexp
// rather than reinterpreting memory.
std::uint32_t Binary32Bits(float f) {
  std::uint32_t sign = std::signbit(f) ? 1u : 0u;
  if (f == 0.0f) return sign << 31;
  int exp = 0;
  const double m = std::frexp(std::fabs(static_cast<double>(f)), &exp);
  // m in [0.5, 1): value = 1.frac * 2^(exp-1)
  const auto frac = static_cast<std::uint32_t>(std::ldexp(m * 2.0 - 1.0, 23));
  const auto biased = static_cast<std::uint32_t>(exp - 1 + 127);
  return (sign << 31) | (biased << 23) | frac;
}

void AppendLe32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::string AsString(const Bytes& b) { return std::string(b.begin(), b.end()); }

TEST(SerDesKindTest, Tokens) {
  for (auto k : kAllKinds) EXPECT_EQ(ParseSerDesKind(ToString(k)), k);
  EXPECT_EQ(ParseSerDesKind("tagged_binary"), SerDesKind::kTaggedBinary);
  EXPECT_FALSE(ParseSerDesKind("protobuf"));
  for (auto k : kAllKinds) EXPECT_EQ(GetSerDes(k).kind(), k);
}

TEST(BitstreamTest, GoldenBytes) {
  FeatureBundle b;
  b.Put(TensorValue::Vector<float>("x", {1.0f, 2.0f}));
  Bytes expected = ToBytes(
      R"({"features":[{"key":"x","dtype":"f32","shape":[2]}]})"
      "\n");
  AppendLe32(expected, Binary32Bits(1.0f));
  AppendLe32(expected, Binary32Bits(2.0f));
  const Bytes tail = {0x00, 0x00, 0x80, 0x3F, 0x00, 0x00, 0x00, 0x40};
  ASSERT_TRUE(std::equal(tail.begin(), tail.end(), expected.end() - 8));
  EXPECT_EQ(Serialize(SerDesKind::kBitstream, b), expected);
}

TEST(BitstreamTest, ElementEncodingMatchesOracle) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<float> dist(-1e6f, 1e6f);
  std::vector<float> v(256);
  for (auto& x : v) x = dist(rng);
  v[0] = 0.0f;
  v[1] = -0.0f;
  FeatureBundle b;
  b.Put(TensorValue::Vector<float>("v", v));
  const Bytes bytes = Serialize(SerDesKind::kBitstream, b);
  Bytes raw;
  for (float x : v) AppendLe32(raw, Binary32Bits(x));
  ASSERT_GE(bytes.size(), raw.size());
  EXPECT_TRUE(std::equal(raw.begin(), raw.end(), bytes.end() - raw.size()));
}

TEST(BitstreamTest, RoundTripWithString) {
  FeatureBundle b;
  b.Put(TensorValue::Vector<float>("x", {1.0f, 2.0f}));
  b.Put(TensorValue::Scalar<std::string>("s", "ok"));
  EXPECT_EQ(Deserialize(SerDesKind::kBitstream,
                        Serialize(SerDesKind::kBitstream, b)),
            b);
}

TEST(BitstreamTest, TruncatedPayload) {
  Bytes bytes = ToBytes(
      R"({"features":[{"key":"x","dtype":"f32","shape":[3]}]})"
      "\n");
  bytes.insert(bytes.end(), 8, 0);
  try {
    Deserialize(SerDesKind::kBitstream, bytes);
    ADD_FAILURE();
  } catch (const RunnerError& e) {
    EXPECT_EQ(e.kind(), RunnerError::Kind::kMalformed);
    EXPECT_NE(e.reason().find("truncated"), std::string::npos) << e.what();
  }
}

TEST(BitstreamTest, BadHeaderAndTrailingBytes) {
  EXPECT_RUNNER_ERROR(Deserialize(SerDesKind::kBitstream, ToBytes("{nope\n")),
                      kMalformed);
  EXPECT_RUNNER_ERROR(
      Deserialize(SerDesKind::kBitstream, ToBytes(R"({"features":[]})")),
      kMalformed);
  EXPECT_RUNNER_ERROR(
      Deserialize(SerDesKind::kBitstream,
                  ToBytes(R"({"features":[{"key":"x","dtype":"f16","shape":[]}]})"
                          "\n\0\0")),
      kMalformed);
  Bytes extra = ToBytes(R"({"features":[]})"
                        "\n");
  extra.push_back(0);
  EXPECT_RUNNER_ERROR(Deserialize(SerDesKind::kBitstream, extra), kMalformed);
}

TEST(BitstreamTest, ExpectedSpecsEnforced) {
  FeatureBundle b;
  b.Put(TensorValue::Vector<float>("x", {1.0f, 2.0f}));
  const Bytes bytes = Serialize(SerDesKind::kBitstream, b);
  const std::vector<TensorSpec> as_f64 = {{"x", DType::kF64, {2}}};
  EXPECT_RUNNER_ERROR(Deserialize(SerDesKind::kBitstream, bytes, as_f64),
                      kTypeMismatch);
}

TEST(BitstreamTest, RawSectionIsSumOfElementBytes) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const FeatureBundle b = RandomBundle(rng);
    const Bytes bytes = Serialize(SerDesKind::kBitstream, b);
    const auto nl = std::find(bytes.begin(), bytes.end(), '\n');
    ASSERT_NE(nl, bytes.end());
    std::size_t raw = 0;
    for (const auto& t : b) {
      if (t.dtype() == DType::kStr) {
        for (const auto& s : t.values<std::string>()) raw += 4 + s.size();
      } else {
        raw += ElementWidth(t.dtype()) * t.size();
      }
    }
    EXPECT_EQ(static_cast<std::size_t>(bytes.end() - nl - 1), raw);
  }
}

TEST(JsonTest, Golden) {
  FeatureBundle flag;
  flag.Put(TensorValue::Scalar<bool>("flag", true));
  EXPECT_EQ(AsString(Serialize(SerDesKind::kJson, flag)), R"({"flag":true})");

  FeatureBundle b;
  b.Put(TensorValue::Make<std::int64_t>("m", {2, 2}, {1, 2, 3, 4}));
  b.Put(TensorValue::Scalar<double>("d", 0.1));
  b.Put(TensorValue::Scalar<std::string>("s", "a\"b"));
  EXPECT_EQ(AsString(Serialize(SerDesKind::kJson, b)),
            R"({"m":[[1,2],[3,4]],"d":0.1,"s":"a\"b"})");
  EXPECT_EQ(AsString(Serialize(SerDesKind::kJson, FeatureBundle{})), "{}");
}

TEST(JsonTest, FloatTextRoundTripsExactly) {
  FeatureBundle b;
  b.Put(TensorValue::Scalar<float>("f", 0.1f));
  const std::string text = AsString(Serialize(SerDesKind::kJson, b));
  const auto colon = text.find(':');
  const double parsed = std::strtod(text.c_str() + colon + 1, nullptr);
  EXPECT_EQ(static_cast<float>(parsed), 0.1f);
  EXPECT_EQ(parsed, static_cast<double>(0.1f));
}

TEST(JsonTest, NonFiniteRejected) {
  FeatureBundle b;
  b.Put(TensorValue::Scalar<double>("d", std::nan("")));
  EXPECT_RUNNER_ERROR(Serialize(SerDesKind::kJson, b), kMalformed);
}

TEST(JsonTest, InferredTypesWithoutSpecs) {
  const auto b = Deserialize(
      SerDesKind::kJson,
      ToBytes(R"({"a":1,"b":1.5,"c":[[1,2],[3,4]],"d":"s","e":[true,false]})"));
  ASSERT_EQ(b.size(), 5u);
  EXPECT_EQ(b.entries()[0], TensorValue::Scalar<std::int64_t>("a", 1));
  EXPECT_EQ(b.entries()[1], TensorValue::Scalar<double>("b", 1.5));
  EXPECT_EQ(b.entries()[2],
            TensorValue::Make<std::int64_t>("c", {2, 2}, {1, 2, 3, 4}));
  EXPECT_EQ(b.entries()[3], TensorValue::Scalar<std::string>("d", "s"));
  EXPECT_EQ(b.entries()[4], TensorValue::Vector<bool>("e", {1, 0}));
}

TEST(JsonTest, DecodeErrors) {
  const std::vector<TensorSpec> f32x2 = {{"x", DType::kF32, {2}}};
  EXPECT_RUNNER_ERROR(Deserialize(SerDesKind::kJson, ToBytes("[1,2]")),
                      kMalformed);
  EXPECT_RUNNER_ERROR(Deserialize(SerDesKind::kJson, ToBytes("{\"x\":")),
                      kMalformed);
  EXPECT_RUNNER_ERROR(
      Deserialize(SerDesKind::kJson, ToBytes(R"({"x":[1,2,3]})"), f32x2),
      kMalformed);
  EXPECT_RUNNER_ERROR(
      Deserialize(SerDesKind::kJson, ToBytes(R"({"x":["a","b"]})"), f32x2),
      kTypeMismatch);
  EXPECT_RUNNER_ERROR(
      Deserialize(SerDesKind::kJson, ToBytes(R"({"x":[[1],[2,3]]})")),
      kMalformed);
  const std::vector<TensorSpec> i64 = {{"n", DType::kI64, {}}};
  EXPECT_RUNNER_ERROR(
      Deserialize(SerDesKind::kJson, ToBytes(R"({"n":1.5})"), i64),
      kTypeMismatch);
}

TEST(TaggedBinaryTest, Golden) {
  FeatureBundle b;
  b.Put(TensorValue::Vector<float>("x", {1.0f, 2.0f}));
  b.Put(TensorValue::Scalar<std::string>("s", "ok"));
  const Bytes expected = {0x02, 0x01, 0x00, 'x',  0x01, 0x02, 0x00,
                          0x00, 0x00, 0x00, 0x00, 0x80, 0x3F, 0x00,
                          0x00, 0x00, 0x40, 0x05, 0x01, 0x00, 's',
                          0x00, 0x02, 0x00, 0x00, 0x00, 'o',  'k'};
  EXPECT_EQ(Serialize(SerDesKind::kTaggedBinary, b), expected);
  EXPECT_TRUE(Serialize(SerDesKind::kTaggedBinary, FeatureBundle{}).empty());
}

TEST(TaggedBinaryTest, EveryUnknownTagRejected) {
  FeatureBundle b;
  b.Put(TensorValue::Scalar<std::int64_t>("k", 3));
  Bytes bytes = Serialize(SerDesKind::kTaggedBinary, b);
  for (int tag = 0; tag < 256; ++tag) {
    bytes[0] = static_cast<std::uint8_t>(tag);
    if (tag >= 1 && tag <= 5) continue;
    try {
      Deserialize(SerDesKind::kTaggedBinary, bytes);
      ADD_FAILURE() << "tag " << tag << " accepted";
    } catch (const RunnerError& e) {
      EXPECT_EQ(e.kind(), RunnerError::Kind::kMalformed);
      EXPECT_NE(e.reason().find("unknown tag"), std::string::npos) << e.what();
    }
  }
}

TEST(TaggedBinaryTest, DuplicateKeyRejected) {
  FeatureBundle b;
  b.Put(TensorValue::Scalar<std::int64_t>("k", 3));
  Bytes bytes = Serialize(SerDesKind::kTaggedBinary, b);
  const Bytes once = bytes;
  bytes.insert(bytes.end(), once.begin(), once.end());
  EXPECT_RUNNER_ERROR(Deserialize(SerDesKind::kTaggedBinary, bytes),
                      kMalformed);
}

TEST(SerDesTest, InvalidUtf8Rejected) {
  const char* bad[] = {"\xff", "\xc0\xaf", "\xed\xa0\x80", "\xf4\x90\x80\x80",
                       "\xe2\x82"};
  for (const char* s : bad) {
    EXPECT_RUNNER_ERROR(ValidateUtf8(s), kMalformed);
    FeatureBundle b;
    b.Put(TensorValue::Scalar<std::string>("s", s));
    for (auto k : kAllKinds) EXPECT_RUNNER_ERROR(Serialize(k, b), kMalformed);
  }
  EXPECT_NO_THROW(ValidateUtf8("caf\xc3\xa9 \xf0\x9f\x98\x80"));
}

TEST(SerDesTest, PayloadSize) {
  FeatureBundle b;
  b.Put(TensorValue::Vector<float>("x", std::vector<float>(500, 0.25f)));
  const Bytes bits = Serialize(SerDesKind::kBitstream, b);
  const std::string header =
      R"({"features":[{"key":"x","dtype":"f32","shape":[500]}]})";
  EXPECT_EQ(PayloadSize(SerDesKind::kBitstream, b), header.size() + 1 + 2000);
  EXPECT_EQ(PayloadSize(SerDesKind::kBitstream, b), bits.size());
  EXPECT_GT(PayloadSize(SerDesKind::kJson, b),
            PayloadSize(SerDesKind::kBitstream, b));
  EXPECT_EQ(PayloadSize(SerDesKind::kJson, FeatureBundle{}), 2u);
}

TEST(SerDesTest, PayloadSizeMatchesSerializeProperty) {
  std::mt19937_64 rng(3);
  testing::BundleGenOptions opt;
  opt.non_finite = false;
  for (int i = 0; i < 200; ++i) {
    const auto b = RandomBundle(rng, opt);
    for (auto k : kAllKinds) {
      EXPECT_EQ(PayloadSize(k, b), Serialize(k, b).size()) << ToString(k);
    }
  }
}

TEST(SerDesTest, RoundTripAndDeterminismProperty) {
  std::mt19937_64 rng(2024);
  testing::BundleGenOptions binary_opt;
  testing::BundleGenOptions json_opt;
  json_opt.non_finite = false;
  for (int i = 0; i < 500; ++i) {
    const auto binary = RandomBundle(rng, binary_opt);
    const auto text = RandomBundle(rng, json_opt);
    EXPECT_EQ(RoundTrip(SerDesKind::kBitstream, binary), binary);
    EXPECT_EQ(RoundTrip(SerDesKind::kTaggedBinary, binary), binary);
    EXPECT_EQ(RoundTrip(SerDesKind::kJson, text), text);
    for (auto k : kAllKinds) {
      EXPECT_EQ(Serialize(k, text), Serialize(k, text));
    }
  }
}

TEST(SerDesTest, TruncatedPayloadsNeverDecodeToOriginal) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto b = RandomBundle(rng);
    if (b.empty()) continue;
    for (auto k : {SerDesKind::kBitstream, SerDesKind::kTaggedBinary}) {
      const Bytes bytes = Serialize(k, b);
      for (std::size_t n = 0; n < bytes.size(); ++n) {
        try {
          const auto got = Deserialize(k, ByteView(bytes.data(), n));
          EXPECT_NE(got, b) << ToString(k) << " prefix " << n;
          EXPECT_EQ(k, SerDesKind::kTaggedBinary);
        } catch (const RunnerError& e) {
          EXPECT_EQ(e.kind(), RunnerError::Kind::kMalformed);
        }
      }
    }
  }
}

TEST(SerDesTest, RandomGarbageOnlyRaisesRunnerError) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> len(0, 64);
  for (int i = 0; i < 2000; ++i) {
    Bytes bytes(static_cast<std::size_t>(len(rng)));
    for (auto& x : bytes) x = static_cast<std::uint8_t>(rng());
    for (auto k : kAllKinds) {
      try {
        Deserialize(k, bytes);
      } catch (const RunnerError&) {
      }
    }
  }
}

}  // namespace
}  // namespace mlbridge
