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

#include "ctga/pcap.h"

#include <array>
#include <istream>
#include <ostream>

namespace ctga {

namespace {

constexpr uint32_t kMagicMicros = 0xa1b2c3d4;
constexpr uint32_t kMagicNanos = 0xa1b23c4d;
constexpr uint32_t kMaxRecordSize = 256 * 1024;

uint32_t ByteSwap(uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00) | ((v << 8) & 0xff0000) | (v << 24);
}

uint32_t LoadLe32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
         static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
}

void PutLe32(std::ostream& out, uint32_t v) {
  char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
               static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
  out.write(b, 4);
}

void PutLe16(std::ostream& out, uint16_t v) {
  char b[2] = {static_cast<char>(v), static_cast<char>(v >> 8)};
  out.write(b, 2);
}

}  // namespace

std::vector<PcapRecord> ReadPcap(std::istream& in) {
  std::array<uint8_t, 24> header;
  if (!in.read(reinterpret_cast<char*>(header.data()), header.size())) {
    throw PcapError("pcap: missing global header");
  }
  uint32_t magic = LoadLe32(header.data());
  bool swapped = false;
  bool nanos = false;
  if (magic == kMagicMicros) {
  } else if (magic == kMagicNanos) {
    nanos = true;
  } else if (magic == ByteSwap(kMagicMicros)) {
    swapped = true;
  } else if (magic == ByteSwap(kMagicNanos)) {
    swapped = nanos = true;
  } else {
    throw PcapError("pcap: bad magic");
  }
  auto field = [swapped](const uint8_t* p) {
    uint32_t v = LoadLe32(p);
    return swapped ? ByteSwap(v) : v;
  };
  uint32_t linktype = field(header.data() + 20);
  if (linktype != kLinkTypeEthernet) {
    throw PcapError("pcap: unsupported link type " + std::to_string(linktype));
  }

  std::vector<PcapRecord> records;
  std::array<uint8_t, 16> rec;
  while (in.read(reinterpret_cast<char*>(rec.data()), rec.size())) {
    uint32_t sec = field(rec.data());
    uint32_t frac = field(rec.data() + 4);
    uint32_t incl = field(rec.data() + 8);
    uint32_t orig = field(rec.data() + 12);
    if (incl > kMaxRecordSize) throw PcapError("pcap: oversized record");
    PcapRecord r;
    r.timestamp_us = static_cast<uint64_t>(sec) * 1000000 + (nanos ? frac / 1000 : frac);
    r.original_length = orig;
    r.data.resize(incl);
    if (incl > 0 && !in.read(reinterpret_cast<char*>(r.data.data()), incl)) {
      throw PcapError("pcap: truncated record");
    }
    records.push_back(std::move(r));
  }
  if (in.gcount() != 0) throw PcapError("pcap: truncated record header");
  return records;
}

std::vector<PcapRecord> ReadPcapFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PcapError("pcap: cannot open " + path);
  return ReadPcap(in);
}

PcapWriter::PcapWriter(std::ostream& out, uint32_t snaplen)
    : out_(out), snaplen_(snaplen) {
  PutLe32(out_, kMagicMicros);
  PutLe16(out_, 2);
  PutLe16(out_, 4);
  PutLe32(out_, 0);
  PutLe32(out_, 0);
  PutLe32(out_, snaplen_);
  PutLe32(out_, kLinkTypeEthernet);
}

void PcapWriter::Write(const PcapRecord& record) {
  auto incl = static_cast<uint32_t>(std::min<size_t>(record.data.size(), snaplen_));
  PutLe32(out_, static_cast<uint32_t>(record.timestamp_us / 1000000));
  PutLe32(out_, static_cast<uint32_t>(record.timestamp_us % 1000000));
  PutLe32(out_, incl);
  PutLe32(out_, record.original_length ? record.original_length
                                       : static_cast<uint32_t>(record.data.size()));
  out_.write(reinterpret_cast<const char*>(record.data.data()), incl);
  ++count_;
}

void WritePcapFile(const std::string& path, const std::vector<PcapRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw PcapError("pcap: cannot create " + path);
  PcapWriter writer(out);
  for (const auto& r : records) writer.Write(r);
  if (!out) throw PcapError("pcap: write failed for " + path);
}

}  // namespace ctga
