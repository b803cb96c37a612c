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

// Scripted evaluator worker for fault-injection tests. Speaks the line
// protocol on stdin/stdout, or on TCP with --listen.
//
//   --mode echo          reply --fitness for every request (default 0.42)
//   --mode hash          reply a fitness derived from the request id
//   --mode error         reply {"type":"error"}
//   --mode delay-first   sleep --delay-ms before the first reply ever (needs --marker)
//   --mode delay-always  sleep --delay-ms before every reply
//   --mode die-first     exit without replying to the first request ever (needs --marker)
//   --mode malformed     reply a line that is not JSON
//   --mode wrong-id      reply a result for a different id
//   --mode bad-version   announce protocol version 2
//
// Results are cached by request id; each actual "training" appends the id
// to --log when given.

#include <netinet/in.h>
#include <sys/socket.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <thread>

#include "evonas/channel.hpp"
#include "evonas/protocol.hpp"

namespace {

namespace proto = evonas::protocol;

struct Options {
  std::string mode = "echo";
  double fitness = 0.42;
  int delay_ms = 1000;
  std::string marker;
  std::string log;
  int listen_port = -1;
  std::string port_file;
};

class RawChannel : public evonas::FdLineChannel {
 public:
  RawChannel(int in, int out) : in_(in), out_(out) {}
  std::string describe() const override { return "engine"; }

 protected:
  int read_fd() const override { return in_; }
  int write_fd() const override { return out_; }

 private:
  int in_;
  int out_;
};

bool first_time(const Options& opt) {
  if (opt.marker.empty() || std::filesystem::exists(opt.marker)) return false;
  std::ofstream(opt.marker) << "seen\n";
  return true;
}

double hashed_fitness(const std::string& id) {
  return static_cast<double>(std::hash<std::string>{}(id) % 1000) / 1000.0;
}

void serve(evonas::LineChannel& channel, const Options& opt,
           std::map<std::string, double>& results) {
  constexpr auto kForever = std::chrono::hours(24);
  while (true) {
    std::optional<std::string> line;
    try {
      line = channel.read_line(kForever);
    } catch (const evonas::TransportError&) {
      return;
    }
    if (!line) continue;

    proto::Message message;
    try {
      message = proto::decode(*line);
    } catch (const evonas::ProtocolError& e) {
      channel.write_line(proto::encode(proto::ErrorReply{"", e.what()}));
      continue;
    }
    if (std::holds_alternative<proto::Hello>(message)) {
      const int version = opt.mode == "bad-version" ? 2 : proto::kProtocolVersion;
      channel.write_line(proto::encode(proto::Hello{version}));
      continue;
    }
    const auto* request = std::get_if<proto::EvaluateRequest>(&message);
    if (request == nullptr) {
      channel.write_line(proto::encode(proto::ErrorReply{"", "expected an evaluate request"}));
      continue;
    }

    if (opt.mode == "die-first" && first_time(opt)) std::exit(0);
    if ((opt.mode == "delay-first" && first_time(opt)) || opt.mode == "delay-always") {
      std::this_thread::sleep_for(std::chrono::milliseconds(opt.delay_ms));
    }
    if (opt.mode == "error") {
      channel.write_line(proto::encode(proto::ErrorReply{request->id, "out of memory"}));
      continue;
    }
    if (opt.mode == "malformed") {
      channel.write_line("this is not json\n");
      continue;
    }

    auto cached = results.find(request->id);
    if (cached == results.end()) {
      const double v = opt.mode == "hash" ? hashed_fitness(request->id) : opt.fitness;
      cached = results.emplace(request->id, v).first;
      if (!opt.log.empty()) std::ofstream(opt.log, std::ios::app) << request->id << "\n";
    }
    const std::string id = opt.mode == "wrong-id" ? request->id + "|Pmax" : request->id;
    channel.write_line(proto::encode(proto::Result{id, cached->second}));
  }
}

int listen_and_serve(const Options& opt, std::map<std::string, double>& results) {
  const int server = ::socket(AF_INET, SOCK_STREAM, 0);
  int yes = 1;
  ::setsockopt(server, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(opt.listen_port));
  if (::bind(server, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::listen(server, 4) != 0) {
    std::perror("stub_worker: bind/listen");
    return 1;
  }
  socklen_t len = sizeof addr;
  ::getsockname(server, reinterpret_cast<sockaddr*>(&addr), &len);
  {
    const auto tmp = opt.port_file + ".tmp";
    std::ofstream(tmp) << ntohs(addr.sin_port) << "\n";
    std::filesystem::rename(tmp, opt.port_file);
  }
  while (true) {
    const int client = ::accept(server, nullptr, nullptr);
    if (client < 0) return 1;
    RawChannel channel(client, client);
    serve(channel, opt, results);
    ::close(client);
  }
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string key = argv[i];
    const std::string value = argv[i + 1];
    if (key == "--mode") opt.mode = value;
    else if (key == "--fitness") opt.fitness = std::stod(value);
    else if (key == "--delay-ms") opt.delay_ms = std::stoi(value);
    else if (key == "--marker") opt.marker = value;
    else if (key == "--log") opt.log = value;
    else if (key == "--listen") opt.listen_port = std::stoi(value);
    else if (key == "--port-file") opt.port_file = value;
    else {
      std::cerr << "stub_worker: unknown option " << key << "\n";
      return 2;
    }
  }
  evonas::detail::ignore_sigpipe();
  std::map<std::string, double> results;
  if (opt.listen_port >= 0) return listen_and_serve(opt, results);
  RawChannel channel(0, 1);
  serve(channel, opt, results);
  return 0;
}
