#include <doctest.h>

#include <vector>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/wire.hpp"

using namespace saber;

namespace {

Transition random_transition(Rng& rng) {
  Transition t;
  t.obs_key = rng.next();
  t.next_obs_key = rng.next();
  t.action = static_cast<int>(rng.below(18));
  t.n_step_return = rng.uniform() * 20 - 10;
  t.discount_pow_n = rng.bernoulli(0.2) ? 0.0 : rng.uniform();
  t.priority = rng.uniform() * 5;
  return t;
}

WireBlob random_blob(Rng& rng) {
  WireBlob b;
  b.key = rng.next();
  b.bytes.resize(rng.below(64));
  for (auto& x : b.bytes) x = static_cast<uint8_t>(rng.below(256));
  return b;
}

WireMessage random_message(Rng& rng) {
  switch (rng.below(9)) {
    case 0: {
      WirePutBatch m;
      const size_t nt = rng.below(6);
      for (size_t i = 0; i < nt; ++i) m.transitions.push_back(random_transition(rng));
      const size_t nb = rng.below(4);
      for (size_t i = 0; i < nb; ++i) m.blobs.push_back(random_blob(rng));
      return m;
    }
    case 1:
      return WireSampleRequest{static_cast<uint32_t>(rng.below(128)), rng.uniform()};
    case 2: {
      WireSampleResponse m;
      const size_t n = rng.below(5);
      for (size_t i = 0; i < n; ++i) {
        m.transitions.push_back(random_transition(rng));
        m.slots.push_back(static_cast<uint32_t>(rng.below(1000)));
        m.versions.push_back(static_cast<uint32_t>(rng.below(16)));
        m.is_weights.push_back(rng.uniform());
      }
      const size_t nb = rng.below(3);
      for (size_t i = 0; i < nb; ++i) m.blobs.push_back(random_blob(rng));
      return m;
    }
    case 3: {
      WirePriorityUpdate m;
      const size_t n = rng.below(6);
      for (size_t i = 0; i < n; ++i) {
        m.slots.push_back(static_cast<uint32_t>(rng.below(1000)));
        m.versions.push_back(static_cast<uint32_t>(rng.below(16)));
        m.priorities.push_back(rng.uniform() * 3);
      }
      return m;
    }
    case 4:
      return WireParamRequest{};
    case 5: {
      WireParamResponse m;
      m.version = rng.next();
      m.blob.resize(rng.below(200));
      for (auto& x : m.blob) x = static_cast<uint8_t>(rng.below(256));
      return m;
    }
    case 6:
      return WireStats{rng.next(), rng.next(), rng.next(), rng.next(), rng.next(), rng.next()};
    case 7:
      return WireAck{rng.next()};
    default: {
      WireError m;
      m.code = static_cast<uint32_t>(rng.below(100));
      m.message.resize(rng.below(40));
      for (auto& c : m.message) c = static_cast<char>('a' + rng.below(26));
      return m;
    }
  }
}

}  // namespace

TEST_CASE("framing arithmetic: ParamRequest is a 5-byte frame") {
  auto frame = encode(WireParamRequest{});
  REQUIRE(frame.size() == 5);
  CHECK(frame[0] == 1);  // length = tag only
  CHECK(frame[1] == 0);
  CHECK(frame[2] == 0);
  CHECK(frame[3] == 0);
  CHECK(frame[4] == 5);  // ParamRequest tag
  auto decoded = decode(frame);
  CHECK(std::get_if<WireParamRequest>(&decoded) != nullptr);
}

TEST_CASE("length prefix is little-endian and covers tag plus payload") {
  auto frame = encode(WireAck{0x1122334455667788ULL});
  REQUIRE(frame.size() == 4 + 1 + 8);
  CHECK(frame[0] == 9);
  // payload little-endian
  CHECK(frame[5] == 0x88);
  CHECK(frame[12] == 0x11);
}

TEST_CASE("roundtrip fuzz: 10k random messages decode to equal values") {
  Rng rng(2024);
  int failures = 0;
  for (int i = 0; i < 10'000; ++i) {
    WireMessage m = random_message(rng);
    auto frame = encode(m);
    WireMessage back = decode(frame);
    if (!(back == m)) failures++;
  }
  CHECK(failures == 0);
}

TEST_CASE("decode rejects malformed frames without crashing") {
  auto frame = encode(WireStats{1, 2, 3, 4, 5, 6});

  // truncated
  auto truncated = frame;
  truncated.resize(frame.size() - 2);
  CHECK_THROWS_AS(decode(truncated), Error);

  // trailing bytes
  auto trailing = frame;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode(trailing), Error);

  // bad tag
  auto bad_tag = frame;
  bad_tag[4] = 250;
  CHECK_THROWS_AS(decode(bad_tag), Error);

  // length field lies
  auto bad_len = frame;
  bad_len[0] = 3;
  CHECK_THROWS_AS(decode(bad_len), Error);

  // hostile element count in a counted section
  auto put = encode(WirePutBatch{});
  put[5] = 0xff;  // transition count low byte
  put[6] = 0xff;
  CHECK_THROWS_AS(decode(put), Error);

  CHECK_THROWS_AS(decode(std::vector<uint8_t>{}), Error);
  CHECK_THROWS_AS(decode(std::vector<uint8_t>{1, 0, 0, 0}), Error);
}

TEST_CASE("encode is deterministic") {
  Rng rng(7);
  auto m = random_message(rng);
  CHECK(encode(m) == encode(m));
}
