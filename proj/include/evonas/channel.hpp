// Copyright 2026 The evonas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// @file channel.hpp
/// Line-oriented byte channels to evaluator workers: a child process spoken
/// to over its stdin/stdout, or a TCP connection. POSIX only.

#pragma once

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>

#include "evonas/error.hpp"

extern char** environ;

namespace evonas {

class LineChannel {
 public:
  virtual ~LineChannel() = default;

  /// Writes `line` verbatim; the caller supplies the terminating "\n".
  virtual void write_line(std::string_view line) = 0;

  /// Next line without its terminator, or nullopt if none arrived within
  /// `timeout`. Throws TransportError when the peer has gone away.
  virtual std::optional<std::string> read_line(std::chrono::milliseconds timeout) = 0;

  virtual std::string describe() const = 0;
};

namespace detail {

inline std::string errno_text() { return std::strerror(errno); }

class UniqueFd {
 public:
  UniqueFd() = default;
  explicit UniqueFd(int fd) : fd_(fd) {}
  UniqueFd(const UniqueFd&) = delete;
  UniqueFd& operator=(const UniqueFd&) = delete;
  UniqueFd(UniqueFd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  UniqueFd& operator=(UniqueFd&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  ~UniqueFd() { reset(); }

  int get() const noexcept { return fd_; }
  explicit operator bool() const noexcept { return fd_ >= 0; }
  void reset() noexcept {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

inline void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace detail

/// Buffered line reader/writer over a pair of file descriptors.
class FdLineChannel : public LineChannel {
 public:
  void write_line(std::string_view line) override {
    const char* data = line.data();
    std::size_t left = line.size();
    while (left > 0) {
      const ssize_t n = ::write(write_fd(), data, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError("write to " + describe() + " failed: " + detail::errno_text());
      }
      data += n;
      left -= static_cast<std::size_t>(n);
    }
  }

  std::optional<std::string> read_line(std::chrono::milliseconds timeout) override {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + timeout;
    while (true) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - clock::now());
      if (left.count() <= 0) return std::nullopt;

      pollfd pfd{read_fd(), POLLIN, 0};
      const auto wait = std::min<long long>(left.count(), std::numeric_limits<int>::max());
      const int ready = ::poll(&pfd, 1, static_cast<int>(wait));
      if (ready < 0) {
        if (errno == EINTR) continue;
        throw TransportError("poll on " + describe() + " failed: " + detail::errno_text());
      }
      if (ready == 0) return std::nullopt;

      char chunk[4096];
      const ssize_t n = ::read(read_fd(), chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw TransportError("read from " + describe() + " failed: " + detail::errno_text());
      }
      if (n == 0) throw TransportError(describe() + " closed the connection");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 protected:
  virtual int read_fd() const = 0;
  virtual int write_fd() const = 0;

 private:
  std::string buffer_;
};

/// Runs `command` through /bin/sh and talks to it over its stdin/stdout.
/// Its stderr is inherited. Destruction closes the pipes and, if the child
/// has not exited shortly after, kills it.
class SubprocessChannel : public FdLineChannel {
 public:
  explicit SubprocessChannel(std::string command) : command_(std::move(command)) {
    detail::ignore_sigpipe();
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) {
      throw TransportError("pipe: " + detail::errno_text());
    }
    detail::UniqueFd child_in(to_child[0]);
    stdin_ = detail::UniqueFd(to_child[1]);
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      throw TransportError("pipe: " + detail::errno_text());
    }
    stdout_ = detail::UniqueFd(from_child[0]);
    detail::UniqueFd child_out(from_child[1]);

    // The child leads its own process group so that everything the shell
    // starts can be killed together.
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, child_in.get(), STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, child_out.get(), STDOUT_FILENO);
    posix_spawnattr_t attributes;
    posix_spawnattr_init(&attributes);
    posix_spawnattr_setflags(&attributes, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attributes, 0);
    std::string shell = "/bin/sh";
    std::string flag = "-c";
    char* argv[] = {shell.data(), flag.data(), command_.data(), nullptr};
    const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, &attributes, argv, environ);
    posix_spawnattr_destroy(&attributes);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) {
      throw TransportError("cannot start worker '" + command_ + "': " + std::strerror(rc));
    }
  }

  SubprocessChannel(const SubprocessChannel&) = delete;
  SubprocessChannel& operator=(const SubprocessChannel&) = delete;

  ~SubprocessChannel() override {
    stdin_.reset();
    stdout_.reset();
    if (pid_ <= 0) return;
    int status = 0;
    for (int i = 0; i < 20; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        ::kill(-pid_, SIGKILL);
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    ::kill(-pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }

  pid_t pid() const noexcept { return pid_; }
  std::string describe() const override { return "worker '" + command_ + "'"; }

 protected:
  int read_fd() const override { return stdout_.get(); }
  int write_fd() const override { return stdin_.get(); }

 private:
  std::string command_;
  pid_t pid_ = -1;
  detail::UniqueFd stdin_;
  detail::UniqueFd stdout_;
};

/// Connection to a worker listening on host:port.
class TcpChannel : public FdLineChannel {
 public:
  TcpChannel(const std::string& host, const std::string& port)
      : address_(host + ":" + port) {
    detail::ignore_sigpipe();
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* found = nullptr;
    if (const int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &found); rc != 0) {
      throw TransportError("cannot resolve " + address_ + ": " + ::gai_strerror(rc));
    }
    std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(found, ::freeaddrinfo);
    for (auto* ai = found; ai != nullptr; ai = ai->ai_next) {
      detail::UniqueFd fd(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
      if (!fd) continue;
      if (::connect(fd.get(), ai->ai_addr, ai->ai_addrlen) == 0) {
        socket_ = std::move(fd);
        return;
      }
    }
    throw TransportError("cannot connect to " + address_ + ": " + detail::errno_text());
  }

  /// "host:port"
  static std::unique_ptr<TcpChannel> connect(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == address.size()) {
      throw TransportError("worker address must look like host:port, got '" + address + "'");
    }
    return std::make_unique<TcpChannel>(address.substr(0, colon), address.substr(colon + 1));
  }

  std::string describe() const override { return "worker at " + address_; }

 protected:
  int read_fd() const override { return socket_.get(); }
  int write_fd() const override { return socket_.get(); }

 private:
  std::string address_;
  detail::UniqueFd socket_;
};

}  // namespace evonas
