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

// Classic libpcap savefiles: microsecond timestamps, Ethernet link type.
// Nanosecond and big-endian files are accepted on read.

#ifndef CTGA_PCAP_H_
#define CTGA_PCAP_H_

#include <cstdint>
#include <fstream>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctga/crypto.h"

namespace ctga {

inline constexpr uint32_t kLinkTypeEthernet = 1;

struct PcapRecord {
  uint64_t timestamp_us = 0;
  Bytes data;
  uint32_t original_length = 0;  // 0 means data.size()
};

class PcapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reads the whole file; throws PcapError if it is unreadable, has a bad
// global header or a truncated record, or uses a link type other than
// Ethernet.
std::vector<PcapRecord> ReadPcap(std::istream& in);
std::vector<PcapRecord> ReadPcapFile(const std::string& path);

class PcapWriter {
 public:
  // Writes the global header immediately.
  explicit PcapWriter(std::ostream& out, uint32_t snaplen = 65535);
  void Write(const PcapRecord& record);
  size_t count() const { return count_; }

 private:
  std::ostream& out_;
  uint32_t snaplen_;
  size_t count_ = 0;
};

void WritePcapFile(const std::string& path, const std::vector<PcapRecord>& records);

}  // namespace ctga

#endif  // CTGA_PCAP_H_
