// Copyright 2026 The ctga Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctga/logserve.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace ctga {

namespace {

sockaddr_in MakeAddress(const std::string& address, uint16_t port) {
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(port);
  if (inet_pton(AF_INET, address.c_str(), &sa.sin_addr) != 1) {
    throw ServerError("bad IPv4 address " + address);
  }
  return sa;
}

}  // namespace

void LogServer::AddLog(MerkleLog* log) {
  std::string name = log->id().name;
  if (!logs_.emplace(name, log).second) throw ServerError("log served twice: " + name);
}

void LogServer::AddSourceClass(const Ipv4Prefix& prefix, std::string label) {
  classes_.Insert(prefix, std::move(label));
}

std::string LogServer::ClassOf(uint32_t source) const {
  auto m = classes_.Lookup(source);
  return m ? *m->value : FormatIpv4(source);
}

std::optional<Bytes> LogServer::HandleQuery(ByteSpan query, uint32_t source) {
  ++counters_.queries;
  auto q = ParseDnsQuery(query);
  if (!q) {
    ++counters_.malformed;
    return std::nullopt;
  }
  auto log_name = LogNameFromQuery(q->name);
  auto it = log_name ? logs_.find(*log_name) : logs_.end();
  if (it == logs_.end() || q->qtype != kDnsTypeTxt || q->qclass != kDnsClassIn) {
    ++counters_.name_errors;
    return BuildNameErrorResponse(*q);
  }
  auto sth = it->second->ServeSth(ClassOf(source));
  if (!sth) {
    ++counters_.name_errors;
    return BuildNameErrorResponse(*q);
  }
  ++counters_.answered;
  return BuildSthResponse(*log_name, *sth, q->txid);
}

UdpEndpoint::UdpEndpoint(LogServer* server, const std::string& bind_address, uint16_t port)
    : server_(server) {
  sockaddr_in sa = MakeAddress(bind_address, port);
  fd_ = socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw ServerError(std::string("socket: ") + std::strerror(errno));
  if (bind(fd_, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    std::string why = std::strerror(errno);
    close(fd_);
    throw ServerError("cannot bind " + bind_address + ":" + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof sa;
  getsockname(fd_, reinterpret_cast<sockaddr*>(&sa), &len);
  port_ = ntohs(sa.sin_port);
}

UdpEndpoint::~UdpEndpoint() {
  if (fd_ >= 0) close(fd_);
}

uint64_t UdpEndpoint::Serve(uint64_t max_queries, int idle_timeout_ms) {
  uint64_t handled = 0;
  uint8_t buf[65536];
  while (max_queries == 0 || handled < max_queries) {
    pollfd p{fd_, POLLIN, 0};
    int ready = poll(&p, 1, idle_timeout_ms > 0 ? idle_timeout_ms : -1);
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw ServerError(std::string("poll: ") + std::strerror(errno));
    }
    if (ready == 0) break;
    sockaddr_in from{};
    socklen_t from_len = sizeof from;
    ssize_t n = recvfrom(fd_, buf, sizeof buf, 0, reinterpret_cast<sockaddr*>(&from), &from_len);
    if (n < 0) continue;
    ++handled;
    auto response = server_->HandleQuery(ByteSpan(buf, static_cast<size_t>(n)), ntohl(from.sin_addr.s_addr));
    if (response) {
      sendto(fd_, response->data(), response->size(), 0, reinterpret_cast<sockaddr*>(&from), from_len);
    }
  }
  return handled;
}

std::optional<Bytes> QueryUdp(const std::string& address, uint16_t port, ByteSpan query,
                              int timeout_ms, const std::string& source_address) {
  int fd = socket(AF_INET, SOCK_DGRAM, 0);
  if (fd < 0) throw ServerError(std::string("socket: ") + std::strerror(errno));
  if (!source_address.empty()) {
    sockaddr_in src = MakeAddress(source_address, 0);
    if (bind(fd, reinterpret_cast<sockaddr*>(&src), sizeof src) != 0) {
      close(fd);
      throw ServerError("cannot bind source " + source_address);
    }
  }
  sockaddr_in dst = MakeAddress(address, port);
  sendto(fd, query.data(), query.size(), 0, reinterpret_cast<sockaddr*>(&dst), sizeof dst);
  pollfd p{fd, POLLIN, 0};
  std::optional<Bytes> out;
  if (poll(&p, 1, timeout_ms) == 1) {
    Bytes buf(65536);
    ssize_t n = recv(fd, buf.data(), buf.size(), 0);
    if (n >= 0) {
      buf.resize(static_cast<size_t>(n));
      out = std::move(buf);
    }
  }
  close(fd);
  return out;
}

}  // namespace ctga
