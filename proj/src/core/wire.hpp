#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "core/replay.hpp"

namespace saber {

// Binary wire protocol of the replay/parameter services. Framing:
//
//   [u32 length, little-endian][u8 tag][payload]
//
// where length counts the tag byte plus the payload. All integers are
// little-endian; floats are IEEE-754 little-endian. decode() rejects unknown
// tags, short frames and trailing bytes. The full byte layout is documented
// in docs/protocol.md.

struct WireBlob {
  uint64_t key = 0;
  std::vector<uint8_t> bytes;
  bool operator==(const WireBlob&) const = default;
};

struct WirePutBatch {
  std::vector<Transition> transitions;
  std::vector<WireBlob> blobs;
  bool operator==(const WirePutBatch&) const = default;
};

struct WireSampleRequest {
  uint32_t batch = 0;
  double beta = 0.0;
  bool operator==(const WireSampleRequest&) const = default;
};

struct WireSampleResponse {
  std::vector<Transition> transitions;
  std::vector<uint32_t> slots;
  std::vector<uint32_t> versions;
  std::vector<double> is_weights;
  std::vector<WireBlob> blobs;  // observation blobs referenced by the batch
  bool operator==(const WireSampleResponse&) const = default;
};

struct WirePriorityUpdate {
  std::vector<uint32_t> slots;
  std::vector<uint32_t> versions;
  std::vector<double> priorities;
  bool operator==(const WirePriorityUpdate&) const = default;
};

struct WireParamRequest {
  bool operator==(const WireParamRequest&) const = default;
};

struct WireParamResponse {
  uint64_t version = 0;
  std::vector<uint8_t> blob;
  bool operator==(const WireParamResponse&) const = default;
};

// Doubles as the stats request (all-zero fields) and response.
struct WireStats {
  uint64_t size = 0;
  uint64_t capacity = 0;
  uint64_t insertions = 0;
  uint64_t overwrites = 0;
  uint64_t stale_updates = 0;
  uint64_t samples_served = 0;
  bool operator==(const WireStats&) const = default;
};

struct WireAck {
  uint64_t value = 0;
  bool operator==(const WireAck&) const = default;
};

struct WireError {
  uint32_t code = 0;
  std::string message;
  bool operator==(const WireError&) const = default;
};

using WireMessage = std::variant<WirePutBatch, WireSampleRequest, WireSampleResponse,
                                 WirePriorityUpdate, WireParamRequest, WireParamResponse,
                                 WireStats, WireAck, WireError>;

// Full frame including the length prefix.
std::vector<uint8_t> encode(const WireMessage& message);
// Decodes a full frame; total and deterministic, throws on malformed input.
WireMessage decode(const std::vector<uint8_t>& frame);

inline constexpr size_t kMaxFrameBytes = 256u << 20;  // connection-killing guard

}  // namespace saber
