#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace saber {

// Minimal blocking TCP helpers for the loopback/LAN services. Addresses are
// `host:port`; port 0 binds an ephemeral port.

class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(int fd) : fd_(fd) {}
  TcpStream(TcpStream&& other) noexcept;
  TcpStream& operator=(TcpStream&& other) noexcept;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;
  ~TcpStream();

  static TcpStream connect(const std::string& address);

  void send_all(const uint8_t* data, size_t n);
  // false on clean EOF at a frame boundary
  bool recv_exact(uint8_t* data, size_t n);

  void send_frame(const std::vector<uint8_t>& frame);
  bool recv_frame(std::vector<uint8_t>& frame);

  bool valid() const { return fd_ >= 0; }
  void close();
  // unblocks a peer thread stuck in recv/send without closing the fd
  void shutdown_rw();

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  explicit TcpListener(const std::string& address);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  TcpStream accept();  // invalid stream after shutdown()
  int port() const { return port_; }
  void shutdown();

 private:
  int fd_ = -1;
  int port_ = 0;
};

}  // namespace saber
