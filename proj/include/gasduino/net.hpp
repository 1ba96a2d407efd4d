#pragma once

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "gasduino/node.hpp"

namespace gasduino {

// RAII file descriptor.
class SocketFd {
 public:
  SocketFd() = default;
  explicit SocketFd(int fd) : fd_(fd) {}
  SocketFd(SocketFd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  SocketFd& operator=(SocketFd&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  SocketFd(const SocketFd&) = delete;
  SocketFd& operator=(const SocketFd&) = delete;
  ~SocketFd() { reset(); }

  int get() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() { return std::exchange(fd_, -1); }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline bool send_all(int fd, std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    if (n == 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

inline bool recv_exact(int fd, std::span<std::uint8_t> out, std::int64_t timeout_ms) {
  std::size_t got = 0;
  while (got < out.size()) {
    pollfd pfd{fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(timeout_ms));
    if (ready <= 0) return false;  // timeout or poll error
    const ssize_t n = ::recv(fd, out.data() + got, out.size() - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    if (n == 0) return false;  // peer closed
    got += static_cast<std::size_t>(n);
  }
  return true;
}

// Connect with a bounded wait; returns an invalid optional on any failure.
inline std::optional<SocketFd> tcp_connect(const std::string& host, std::uint16_t port,
                                           std::int64_t timeout_ms = 2000) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &result) != 0) {
    return std::nullopt;
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(result, &::freeaddrinfo);

  for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
    SocketFd fd(::socket(ai->ai_family, ai->ai_socktype | SOCK_NONBLOCK, ai->ai_protocol));
    if (!fd.valid()) continue;
    const int rc = ::connect(fd.get(), ai->ai_addr, ai->ai_addrlen);
    if (rc != 0) {
      if (errno != EINPROGRESS) continue;
      pollfd pfd{fd.get(), POLLOUT, 0};
      if (::poll(&pfd, 1, static_cast<int>(timeout_ms)) <= 0) continue;
      int err = 0;
      socklen_t len = sizeof(err);
      if (::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len) != 0 || err != 0) continue;
    }
    // back to blocking mode
    const int flags = ::fcntl(fd.get(), F_GETFL, 0);
    ::fcntl(fd.get(), F_SETFL, flags & ~O_NONBLOCK);
    int one = 1;
    ::setsockopt(fd.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return fd;
  }
  return std::nullopt;
}

class TcpConnection final : public Connection {
 public:
  explicit TcpConnection(SocketFd fd) : fd_(std::move(fd)) {}

  bool send(std::span<const std::uint8_t> bytes) override {
    return fd_.valid() && send_all(fd_.get(), bytes);
  }

  bool recv_exact(std::span<std::uint8_t> out, std::int64_t timeout_ms) override {
    return fd_.valid() && gasduino::recv_exact(fd_.get(), out, timeout_ms);
  }

 private:
  SocketFd fd_;
};

class TcpTransport final : public Transport {
 public:
  explicit TcpTransport(std::int64_t connect_timeout_ms = 2000)
      : connect_timeout_ms_(connect_timeout_ms) {}

  std::unique_ptr<Connection> connect(const std::string& host, std::uint16_t port) override {
    auto fd = tcp_connect(host, port, connect_timeout_ms_);
    if (!fd) return nullptr;
    return std::make_unique<TcpConnection>(std::move(*fd));
  }

 private:
  std::int64_t connect_timeout_ms_;
};

// Listening socket with a wake pipe so accept loops can be stopped cleanly.
class TcpListener {
 public:
  TcpListener() { wake_[0] = wake_[1] = -1; }
  ~TcpListener() { close(); }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  // Binds and listens; port 0 picks an ephemeral port. Returns false on failure.
  bool bind_listen(const std::string& host, std::uint16_t port) {
    SocketFd fd(::socket(AF_INET, SOCK_STREAM, 0));
    if (!fd.valid()) return false;
    int one = 1;
    ::setsockopt(fd.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (host.empty() || host == "0.0.0.0") {
      addr.sin_addr.s_addr = htonl(INADDR_ANY);
    } else if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
      return false;
    }
    if (::bind(fd.get(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) return false;
    if (::listen(fd.get(), 64) != 0) return false;

    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    if (::getsockname(fd.get(), reinterpret_cast<sockaddr*>(&bound), &len) != 0) return false;
    port_ = ntohs(bound.sin_port);

    if (::pipe(wake_) != 0) return false;
    listen_fd_ = std::move(fd);
    return true;
  }

  std::uint16_t port() const { return port_; }
  bool listening() const { return listen_fd_.valid(); }

  // Blocks until a connection arrives or close() is called.
  std::optional<SocketFd> accept_next() {
    while (listen_fd_.valid()) {
      pollfd pfds[2] = {{listen_fd_.get(), POLLIN, 0}, {wake_[0], POLLIN, 0}};
      const int ready = ::poll(pfds, 2, -1);
      if (ready < 0) {
        if (errno == EINTR) continue;
        return std::nullopt;
      }
      if (pfds[1].revents != 0) return std::nullopt;  // woken for shutdown
      if (pfds[0].revents != 0) {
        const int conn = ::accept(listen_fd_.get(), nullptr, nullptr);
        if (conn >= 0) return SocketFd(conn);
        if (errno == EINTR || errno == ECONNABORTED) continue;
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  // Wakes a blocked accept_next(). Safe to call from another thread; the
  // descriptors stay alive until close() runs after the accept loop exits.
  void wake() {
    if (wake_[1] >= 0) {
      const char byte = 1;
      [[maybe_unused]] ssize_t n = ::write(wake_[1], &byte, 1);
    }
  }

  void close() {
    wake();
    listen_fd_.reset();
    for (int& fd : wake_) {
      if (fd >= 0) ::close(fd);
      fd = -1;
    }
  }

 private:
  SocketFd listen_fd_;
  int wake_[2];
  std::uint16_t port_ = 0;
};

}  // namespace gasduino
