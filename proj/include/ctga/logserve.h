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

// A CT-over-DNS endpoint answering sth.<log>.ct.googleapis.com TXT queries
// with one STH per UDP response.

#ifndef CTGA_LOGSERVE_H_
#define CTGA_LOGSERVE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "ctga/coverage.h"
#include "ctga/dns_codec.h"
#include "ctga/merkle_log.h"

namespace ctga {

class ServerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServeCounters {
  uint64_t queries = 0;
  uint64_t answered = 0;
  uint64_t name_errors = 0;
  uint64_t malformed = 0;
};

class LogServer {
 public:
  void AddLog(MerkleLog* log);
  // Sources inside |prefix| belong to |label|. Unmatched sources use their
  // dotted address as the class, which a fork policy may name directly.
  void AddSourceClass(const Ipv4Prefix& prefix, std::string label);
  std::string ClassOf(uint32_t source) const;

  // The response datagram, or nullopt when the query is dropped (not a
  // parseable query). Unknown names, wrong types and logs that have not
  // issued an STH get NXDOMAIN.
  std::optional<Bytes> HandleQuery(ByteSpan query, uint32_t source);

  const ServeCounters& counters() const { return counters_; }

 private:
  std::map<std::string, MerkleLog*, std::less<>> logs_;
  PrefixTrie<std::string> classes_;
  ServeCounters counters_;
};

// Blocking UDP endpoint over a LogServer, handling queries one at a time.
class UdpEndpoint {
 public:
  // Throws ServerError if the address cannot be bound (e.g. port busy).
  // Port 0 picks an ephemeral port.
  UdpEndpoint(LogServer* server, const std::string& bind_address, uint16_t port);
  ~UdpEndpoint();
  UdpEndpoint(const UdpEndpoint&) = delete;
  UdpEndpoint& operator=(const UdpEndpoint&) = delete;

  uint16_t port() const { return port_; }
  // Serves until |max_queries| datagrams were handled (0: forever) or
  // |idle_timeout_ms| passes without one (0: no timeout). Returns the
  // number handled.
  uint64_t Serve(uint64_t max_queries = 0, int idle_timeout_ms = 0);

 private:
  LogServer* server_;
  int fd_ = -1;
  uint16_t port_ = 0;
};

// Sends one query and waits for the answer; for tests and the CLI.
std::optional<Bytes> QueryUdp(const std::string& address, uint16_t port,
                              ByteSpan query, int timeout_ms,
                              const std::string& source_address = "");

}  // namespace ctga

#endif  // CTGA_LOGSERVE_H_
