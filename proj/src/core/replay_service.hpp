#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "core/replay.hpp"
#include "core/sockets.hpp"

namespace saber {

// In-RAM key-value replay service speaking the binary wire protocol. One
// thread per connection; every store operation is atomic under the store
// lock, so concurrent actors and a learner observe linearizable puts,
// samples and priority updates.
class ReplayService {
 public:
  ReplayService(const std::string& bind_address, const ReplayConfig& config, uint64_t seed = 0);
  ~ReplayService();

  void start();
  void stop();
  int port() const;
  std::string address() const;
  ReplayStats stats() const { return store_.stats(); }
  std::string stats_json() const;
  ReplayStore& store() { return store_; }

 private:
  struct Connection {
    TcpStream stream;
    std::thread thread;
  };
  void accept_loop();
  void serve_connection(TcpStream& stream);

  ReplayStore store_;
  TcpListener listener_;
  std::thread accept_thread_;
  std::vector<std::unique_ptr<Connection>> connections_;
  std::mutex conn_mu_;
  std::atomic<bool> running_{false};
};

std::string replay_stats_json(const ReplayStats& stats);

}  // namespace saber
