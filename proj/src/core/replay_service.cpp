#include "core/replay_service.hpp"

#include <cstdio>

#include <json.hpp>

#include "core/error.hpp"
#include "core/wire.hpp"

namespace saber {

ReplayService::ReplayService(const std::string& bind_address, const ReplayConfig& config,
                             uint64_t seed)
    : store_(config, seed), listener_(bind_address) {}

ReplayService::~ReplayService() { stop(); }

int ReplayService::port() const { return listener_.port(); }

std::string ReplayService::address() const {
  return "127.0.0.1:" + std::to_string(listener_.port());
}

void ReplayService::start() {
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void ReplayService::stop() {
  if (!running_.exchange(false)) return;
  listener_.shutdown();
  if (accept_thread_.joinable()) accept_thread_.join();
  std::lock_guard lock(conn_mu_);
  for (auto& c : connections_) c->stream.shutdown_rw();  // unblock recv before join
  for (auto& c : connections_)
    if (c->thread.joinable()) c->thread.join();
  connections_.clear();
}

void ReplayService::accept_loop() {
  while (running_) {
    TcpStream stream = listener_.accept();
    if (!stream.valid()) break;  // shut down
    auto conn = std::make_unique<Connection>();
    conn->stream = std::move(stream);
    Connection* raw = conn.get();
    conn->thread = std::thread([this, raw] {
      serve_connection(raw->stream);
      raw->stream.shutdown_rw();  // let the peer observe EOF
    });
    std::lock_guard lock(conn_mu_);
    connections_.push_back(std::move(conn));
  }
}

void ReplayService::serve_connection(TcpStream& stream) {
  std::vector<uint8_t> frame;
  for (;;) {
    try {
      if (!stream.recv_frame(frame)) return;  // client done
    } catch (const Error&) {
      return;  // peer vanished mid-frame
    }

    WireMessage reply;
    try {
      const WireMessage request = decode(frame);
      if (const auto* put = std::get_if<WirePutBatch>(&request)) {
        for (const auto& b : put->blobs) store_.put_blob(b.key, b.bytes.data(), b.bytes.size());
        for (const auto& t : put->transitions) store_.push_keyed(t);
        reply = WireAck{put->transitions.size()};
      } else if (const auto* req = std::get_if<WireSampleRequest>(&request)) {
        auto batch = store_.sample(static_cast<int>(req->batch), req->beta);
        WireSampleResponse resp;
        resp.transitions = std::move(batch.transitions);
        resp.slots = std::move(batch.slots);
        resp.versions = std::move(batch.versions);
        resp.is_weights = std::move(batch.is_weights);
        // ship each referenced blob once
        std::vector<uint64_t> seen;
        for (const auto& t : resp.transitions) {
          for (uint64_t key : {t.obs_key, t.next_obs_key}) {
            bool dup = false;
            for (uint64_t s : seen) dup = dup || s == key;
            if (dup) continue;
            seen.push_back(key);
            resp.blobs.push_back({key, store_.blob_copy(key)});
          }
        }
        reply = std::move(resp);
      } else if (const auto* upd = std::get_if<WirePriorityUpdate>(&request)) {
        const size_t applied = store_.update_priorities(upd->slots, upd->versions,
                                                        upd->priorities);
        reply = WireAck{applied};
      } else if (std::get_if<WireStats>(&request)) {
        const ReplayStats s = store_.stats();
        reply = WireStats{s.size, s.capacity, s.insertions, s.overwrites, s.stale_updates,
                          s.samples_served};
      } else {
        reply = WireError{1, "unsupported message for the replay service"};
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::parse) {
        std::fprintf(stderr, "[replay-service] malformed frame: %s; closing connection\n",
                     e.what());
        return;
      }
      reply = WireError{static_cast<uint32_t>(e.code()), e.what()};
    }

    try {
      stream.send_frame(encode(reply));
    } catch (const Error&) {
      return;
    }
  }
}

std::string replay_stats_json(const ReplayStats& s) {
  nlohmann::ordered_json j;
  j["size"] = s.size;
  j["capacity"] = s.capacity;
  j["insertions"] = s.insertions;
  j["overwrites"] = s.overwrites;
  j["stale_updates"] = s.stale_updates;
  j["samples_served"] = s.samples_served;
  j["blobs"] = s.blobs;
  return j.dump();
}

std::string ReplayService::stats_json() const { return replay_stats_json(stats()); }

}  // namespace saber
