#include "core/sockets.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "core/error.hpp"
#include "core/wire.hpp"

namespace saber {

namespace {

struct ParsedAddress {
  std::string host;
  uint16_t port;
};

ParsedAddress parse_address(const std::string& address) {
  const size_t colon = address.rfind(':');
  if (colon == std::string::npos)
    raise(ErrorCode::invalid_argument, "address must be host:port, got `" + address + "`");
  ParsedAddress out;
  out.host = address.substr(0, colon);
  if (out.host.empty()) out.host = "127.0.0.1";
  const std::string port_str = address.substr(colon + 1);
  char* end = nullptr;
  long port = std::strtol(port_str.c_str(), &end, 10);
  if (end == port_str.c_str() || *end != '\0' || port < 0 || port > 65535)
    raise(ErrorCode::invalid_argument, "bad port in `" + address + "`");
  out.port = static_cast<uint16_t>(port);
  return out;
}

sockaddr_in make_sockaddr(const ParsedAddress& addr) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(addr.port);
  if (::inet_pton(AF_INET, addr.host.c_str(), &sa.sin_addr) != 1)
    raise(ErrorCode::invalid_argument, "cannot parse host `" + addr.host + "`");
  return sa;
}

}  // namespace

TcpStream::TcpStream(TcpStream&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

TcpStream::~TcpStream() { close(); }

void TcpStream::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void TcpStream::shutdown_rw() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

TcpStream TcpStream::connect(const std::string& address) {
  const auto parsed = parse_address(address);
  const auto sa = make_sockaddr(parsed);
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) raise(ErrorCode::network, "socket() failed: " + std::string(strerror(errno)));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) != 0) {
    const int err = errno;
    ::close(fd);
    raise(ErrorCode::network,
          "connect to " + address + " failed: " + std::string(strerror(err)));
  }
  return TcpStream(fd);
}

void TcpStream::send_all(const uint8_t* data, size_t n) {
  size_t sent = 0;
  while (sent < n) {
    const ssize_t r = ::send(fd_, data + sent, n - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      raise(ErrorCode::network, "send failed: " + std::string(strerror(errno)));
    }
    sent += static_cast<size_t>(r);
  }
}

bool TcpStream::recv_exact(uint8_t* data, size_t n) {
  size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd_, data + got, n - got, 0);
    if (r < 0) {
      if (errno == EINTR) continue;
      raise(ErrorCode::network, "recv failed: " + std::string(strerror(errno)));
    }
    if (r == 0) {
      if (got == 0) return false;  // clean EOF between frames
      raise(ErrorCode::network, "connection closed mid-frame");
    }
    got += static_cast<size_t>(r);
  }
  return true;
}

void TcpStream::send_frame(const std::vector<uint8_t>& frame) {
  send_all(frame.data(), frame.size());
}

bool TcpStream::recv_frame(std::vector<uint8_t>& frame) {
  uint8_t header[4];
  if (!recv_exact(header, 4)) return false;
  const uint32_t length = static_cast<uint32_t>(header[0]) |
                          (static_cast<uint32_t>(header[1]) << 8) |
                          (static_cast<uint32_t>(header[2]) << 16) |
                          (static_cast<uint32_t>(header[3]) << 24);
  if (length == 0 || length > kMaxFrameBytes)
    raise(ErrorCode::parse, "frame length " + std::to_string(length) + " out of range");
  frame.resize(4 + length);
  std::memcpy(frame.data(), header, 4);
  if (!recv_exact(frame.data() + 4, length))
    raise(ErrorCode::network, "connection closed mid-frame");
  return true;
}

TcpListener::TcpListener(const std::string& address) {
  const auto parsed = parse_address(address);
  const auto sa = make_sockaddr(parsed);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) raise(ErrorCode::network, "socket() failed: " + std::string(strerror(errno)));
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) != 0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    raise(ErrorCode::network, "bind " + address + " failed: " + std::string(strerror(err)));
  }
  if (::listen(fd_, 64) != 0) {
    const int err = errno;
    ::close(fd_);
    fd_ = -1;
    raise(ErrorCode::network, "listen failed: " + std::string(strerror(err)));
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
}

TcpListener::~TcpListener() { shutdown(); }

void TcpListener::shutdown() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

TcpStream TcpListener::accept() {
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) return TcpStream();  // listener shut down
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpStream(fd);
}

}  // namespace saber
