#include "core/wire.hpp"

#include <cstring>

#include "core/error.hpp"

namespace saber {

namespace {

enum Tag : uint8_t {
  kTagPutBatch = 1,
  kTagSampleRequest = 2,
  kTagSampleResponse = 3,
  kTagPriorityUpdate = 4,
  kTagParamRequest = 5,
  kTagParamResponse = 6,
  kTagStats = 7,
  kTagAck = 8,
  kTagError = 9,
};

class Writer {
 public:
  void u8(uint8_t v) { out_.push_back(v); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back((v >> (8 * i)) & 0xff);
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back((v >> (8 * i)) & 0xff);
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void bytes(const uint8_t* p, size_t n) { out_.insert(out_.end(), p, p + n); }
  std::vector<uint8_t> take() { return std::move(out_); }

 private:
  std::vector<uint8_t> out_;
};

class Reader {
 public:
  Reader(const uint8_t* p, size_t n) : p_(p), n_(n) {}
  uint8_t u8() {
    need(1);
    return p_[pos_++];
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(p_[pos_++]) << (8 * i);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::vector<uint8_t> bytes(size_t n) {
    need(n);
    std::vector<uint8_t> out(p_ + pos_, p_ + pos_ + n);
    pos_ += n;
    return out;
  }
  size_t remaining() const { return n_ - pos_; }
  // counted element reads guard against hostile length fields
  size_t count(size_t element_floor) {
    const uint32_t c = u32();
    if (static_cast<size_t>(c) * element_floor > remaining())
      raise(ErrorCode::parse, "frame length field exceeds payload");
    return c;
  }

 private:
  void need(size_t n) {
    if (pos_ + n > n_) raise(ErrorCode::parse, "short frame");
  }
  const uint8_t* p_;
  size_t n_;
  size_t pos_ = 0;
};

void write_transition(Writer& w, const Transition& t) {
  w.u64(t.obs_key);
  w.u64(t.next_obs_key);
  w.u32(static_cast<uint32_t>(t.action));
  w.f64(t.n_step_return);
  w.f64(t.discount_pow_n);
  w.f64(t.priority);
}

Transition read_transition(Reader& r) {
  Transition t;
  t.obs_key = r.u64();
  t.next_obs_key = r.u64();
  t.action = static_cast<int>(r.u32());
  t.n_step_return = r.f64();
  t.discount_pow_n = r.f64();
  t.priority = r.f64();
  return t;
}

void write_blob(Writer& w, const WireBlob& b) {
  w.u64(b.key);
  w.u32(static_cast<uint32_t>(b.bytes.size()));
  w.bytes(b.bytes.data(), b.bytes.size());
}

WireBlob read_blob(Reader& r) {
  WireBlob b;
  b.key = r.u64();
  const size_t n = r.count(1);
  b.bytes = r.bytes(n);
  return b;
}

struct Encoder {
  Writer w;

  void operator()(const WirePutBatch& m) {
    w.u8(kTagPutBatch);
    w.u32(static_cast<uint32_t>(m.transitions.size()));
    for (const auto& t : m.transitions) write_transition(w, t);
    w.u32(static_cast<uint32_t>(m.blobs.size()));
    for (const auto& b : m.blobs) write_blob(w, b);
  }
  void operator()(const WireSampleRequest& m) {
    w.u8(kTagSampleRequest);
    w.u32(m.batch);
    w.f64(m.beta);
  }
  void operator()(const WireSampleResponse& m) {
    w.u8(kTagSampleResponse);
    w.u32(static_cast<uint32_t>(m.transitions.size()));
    for (const auto& t : m.transitions) write_transition(w, t);
    for (uint32_t s : m.slots) w.u32(s);
    for (uint32_t v : m.versions) w.u32(v);
    for (double x : m.is_weights) w.f64(x);
    w.u32(static_cast<uint32_t>(m.blobs.size()));
    for (const auto& b : m.blobs) write_blob(w, b);
  }
  void operator()(const WirePriorityUpdate& m) {
    w.u8(kTagPriorityUpdate);
    w.u32(static_cast<uint32_t>(m.slots.size()));
    for (uint32_t s : m.slots) w.u32(s);
    for (uint32_t v : m.versions) w.u32(v);
    for (double p : m.priorities) w.f64(p);
  }
  void operator()(const WireParamRequest&) { w.u8(kTagParamRequest); }
  void operator()(const WireParamResponse& m) {
    w.u8(kTagParamResponse);
    w.u64(m.version);
    w.u32(static_cast<uint32_t>(m.blob.size()));
    w.bytes(m.blob.data(), m.blob.size());
  }
  void operator()(const WireStats& m) {
    w.u8(kTagStats);
    w.u64(m.size);
    w.u64(m.capacity);
    w.u64(m.insertions);
    w.u64(m.overwrites);
    w.u64(m.stale_updates);
    w.u64(m.samples_served);
  }
  void operator()(const WireAck& m) {
    w.u8(kTagAck);
    w.u64(m.value);
  }
  void operator()(const WireError& m) {
    w.u8(kTagError);
    w.u32(m.code);
    w.u32(static_cast<uint32_t>(m.message.size()));
    w.bytes(reinterpret_cast<const uint8_t*>(m.message.data()), m.message.size());
  }
};

}  // namespace

std::vector<uint8_t> encode(const WireMessage& message) {
  Encoder enc;
  std::visit(enc, message);
  auto body = enc.w.take();
  if (body.size() > kMaxFrameBytes) raise(ErrorCode::invalid_argument, "frame too large");
  Writer framed;
  framed.u32(static_cast<uint32_t>(body.size()));
  framed.bytes(body.data(), body.size());
  return framed.take();
}

WireMessage decode(const std::vector<uint8_t>& frame) {
  if (frame.size() < 5) raise(ErrorCode::parse, "frame shorter than header");
  Reader header(frame.data(), frame.size());
  const uint32_t length = header.u32();
  if (length == 0) raise(ErrorCode::parse, "empty frame body");
  if (length > kMaxFrameBytes) raise(ErrorCode::parse, "frame length exceeds limit");
  if (frame.size() != 4 + static_cast<size_t>(length))
    raise(ErrorCode::parse, "frame length mismatch");

  Reader r(frame.data() + 5, frame.size() - 5);
  const uint8_t tag = frame[4];
  WireMessage out;
  switch (tag) {
    case kTagPutBatch: {
      WirePutBatch m;
      const size_t nt = r.count(44);
      for (size_t i = 0; i < nt; ++i) m.transitions.push_back(read_transition(r));
      const size_t nb = r.count(12);
      for (size_t i = 0; i < nb; ++i) m.blobs.push_back(read_blob(r));
      out = std::move(m);
      break;
    }
    case kTagSampleRequest: {
      WireSampleRequest m;
      m.batch = r.u32();
      m.beta = r.f64();
      out = m;
      break;
    }
    case kTagSampleResponse: {
      WireSampleResponse m;
      const size_t n = r.count(44 + 4 + 4 + 8);
      for (size_t i = 0; i < n; ++i) m.transitions.push_back(read_transition(r));
      for (size_t i = 0; i < n; ++i) m.slots.push_back(r.u32());
      for (size_t i = 0; i < n; ++i) m.versions.push_back(r.u32());
      for (size_t i = 0; i < n; ++i) m.is_weights.push_back(r.f64());
      const size_t nb = r.count(12);
      for (size_t i = 0; i < nb; ++i) m.blobs.push_back(read_blob(r));
      out = std::move(m);
      break;
    }
    case kTagPriorityUpdate: {
      WirePriorityUpdate m;
      const size_t n = r.count(16);
      for (size_t i = 0; i < n; ++i) m.slots.push_back(r.u32());
      for (size_t i = 0; i < n; ++i) m.versions.push_back(r.u32());
      for (size_t i = 0; i < n; ++i) m.priorities.push_back(r.f64());
      out = std::move(m);
      break;
    }
    case kTagParamRequest:
      out = WireParamRequest{};
      break;
    case kTagParamResponse: {
      WireParamResponse m;
      m.version = r.u64();
      const size_t n = r.count(1);
      m.blob = r.bytes(n);
      out = std::move(m);
      break;
    }
    case kTagStats: {
      WireStats m;
      m.size = r.u64();
      m.capacity = r.u64();
      m.insertions = r.u64();
      m.overwrites = r.u64();
      m.stale_updates = r.u64();
      m.samples_served = r.u64();
      out = m;
      break;
    }
    case kTagAck: {
      WireAck m;
      m.value = r.u64();
      out = m;
      break;
    }
    case kTagError: {
      WireError m;
      m.code = r.u32();
      const size_t n = r.count(1);
      auto bytes = r.bytes(n);
      m.message.assign(bytes.begin(), bytes.end());
      out = std::move(m);
      break;
    }
    default:
      raise(ErrorCode::parse, "unknown message tag " + std::to_string(tag));
  }
  if (r.remaining() != 0) raise(ErrorCode::parse, "trailing bytes after message");
  return out;
}

}  // namespace saber
