#pragma once

#include "mlbridge/serdes.h"

namespace mlbridge {

class JsonSerDes final : public SerDes {
 public:
  SerDesKind kind() const override { return SerDesKind::kJson; }
  Bytes Serialize(const FeatureBundle& bundle) const override;
  FeatureBundle Deserialize(ByteView bytes,
                            const ExpectedSpecs& expected) const override;
};

class BitstreamSerDes final : public SerDes {
 public:
  SerDesKind kind() const override { return SerDesKind::kBitstream; }
  Bytes Serialize(const FeatureBundle& bundle) const override;
  FeatureBundle Deserialize(ByteView bytes,
                            const ExpectedSpecs& expected) const override;
  std::size_t PayloadSize(const FeatureBundle& bundle) const override;
};

class TaggedBinarySerDes final : public SerDes {
 public:
  SerDesKind kind() const override { return SerDesKind::kTaggedBinary; }
  Bytes Serialize(const FeatureBundle& bundle) const override;
  FeatureBundle Deserialize(ByteView bytes,
                            const ExpectedSpecs& expected) const override;
  std::size_t PayloadSize(const FeatureBundle& bundle) const override;
};

}  // namespace mlbridge
