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

#include "ctga/packet.h"

#include <stdexcept>

namespace ctga {

namespace {

void Put16(Bytes& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void Put32(Bytes& out, uint32_t v) {
  Put16(out, static_cast<uint16_t>(v >> 16));
  Put16(out, static_cast<uint16_t>(v));
}

void Store16(Bytes& out, size_t offset, uint16_t v) {
  out[offset] = static_cast<uint8_t>(v >> 8);
  out[offset + 1] = static_cast<uint8_t>(v);
}

uint16_t Load16(ByteSpan data, size_t offset) {
  return static_cast<uint16_t>(data[offset] << 8 | data[offset + 1]);
}

uint32_t Load32(ByteSpan data, size_t offset) {
  return static_cast<uint32_t>(Load16(data, offset)) << 16 | Load16(data, offset + 2);
}

uint32_t ChecksumAccumulate(ByteSpan data, uint32_t sum) {
  for (size_t i = 0; i + 1 < data.size(); i += 2) sum += Load16(data, i);
  if (data.size() % 2 == 1) sum += static_cast<uint32_t>(data.back()) << 8;
  return sum;
}

uint16_t ChecksumFinish(uint32_t sum) {
  while (sum >> 16) sum = (sum & 0xffff) + (sum >> 16);
  return static_cast<uint16_t>(~sum);
}

// Transport header + payload, checksum field left zero.
Bytes BuildTransport(const PacketBlueprint& bp) {
  Bytes seg;
  switch (bp.transport) {
    case Transport::kUdp:
      Put16(seg, bp.src_port);
      Put16(seg, bp.dst_port);
      Put16(seg, static_cast<uint16_t>(kUdpHeaderSize + bp.payload.size()));
      Put16(seg, 0);
      break;
    case Transport::kTcp:
      Put16(seg, bp.src_port);
      Put16(seg, bp.dst_port);
      Put32(seg, 1);  // seq
      Put32(seg, 1);  // ack
      seg.push_back(5 << 4);
      seg.push_back(0x18);  // PSH, ACK
      Put16(seg, 65535);
      Put16(seg, 0);
      Put16(seg, 0);
      break;
    case Transport::kRaw:
      break;
  }
  seg.insert(seg.end(), bp.payload.begin(), bp.payload.end());
  return seg;
}

size_t ChecksumOffset(Transport t) { return t == Transport::kUdp ? 6 : 16; }

uint8_t TransportProtocol(const PacketBlueprint& bp, std::optional<uint8_t> declared) {
  if (declared) return *declared;
  return bp.transport == Transport::kTcp ? kIpProtoTcp : kIpProtoUdp;
}

void FillTransportChecksum(const PacketBlueprint& bp, Bytes& seg,
                           uint32_t pseudo_sum) {
  if (bp.transport == Transport::kRaw) return;
  uint16_t sum = ChecksumFinish(ChecksumAccumulate(seg, pseudo_sum));
  if (bp.transport == Transport::kUdp && sum == 0) sum = 0xffff;
  Store16(seg, ChecksumOffset(bp.transport), sum);
}

void AppendIpv4(const PacketBlueprint& bp, const Ipv4Fields& ip, Bytes& out) {
  Bytes options = ip.options;
  while (options.size() % 4 != 0) options.push_back(0);
  Bytes seg = BuildTransport(bp);
  uint8_t protocol = TransportProtocol(bp, ip.protocol);

  // Fragments carry a slice of someone else's datagram: no checksum to fix.
  bool is_fragment = ip.more_fragments || ip.fragment_offset != 0;
  if (!is_fragment) {
    uint32_t pseudo = 0;
    pseudo += ip.src >> 16;
    pseudo += ip.src & 0xffff;
    pseudo += ip.dst >> 16;
    pseudo += ip.dst & 0xffff;
    pseudo += protocol;
    pseudo += static_cast<uint32_t>(seg.size());
    FillTransportChecksum(bp, seg, pseudo);
  }

  size_t header_size = kIpv4MinHeaderSize + options.size();
  size_t start = out.size();
  out.push_back(static_cast<uint8_t>(0x40 | (header_size / 4)));
  out.push_back(0);
  Put16(out, static_cast<uint16_t>(header_size + seg.size()));
  Put16(out, ip.identification);
  uint16_t flags = static_cast<uint16_t>((ip.dont_fragment ? 0x4000 : 0) |
                                         (ip.more_fragments ? 0x2000 : 0) |
                                         (ip.fragment_offset & 0x1fff));
  Put16(out, flags);
  out.push_back(ip.ttl);
  out.push_back(protocol);
  Put16(out, 0);
  Put32(out, ip.src);
  Put32(out, ip.dst);
  out.insert(out.end(), options.begin(), options.end());
  Store16(out, start + 10,
          InternetChecksum(ByteSpan(out).subspan(start, header_size)));
  out.insert(out.end(), seg.begin(), seg.end());
}

void AppendIpv6(const PacketBlueprint& bp, const Ipv6Fields& ip, Bytes& out) {
  Bytes seg = BuildTransport(bp);
  uint8_t protocol = TransportProtocol(bp, ip.next_header);
  bool is_fragment =
      ip.fragment && (ip.fragment->more_fragments || ip.fragment->fragment_offset != 0);
  if (!is_fragment) {
    uint32_t pseudo = 0;
    for (size_t i = 0; i < 16; i += 2) {
      pseudo += static_cast<uint32_t>(ip.src[i] << 8 | ip.src[i + 1]);
      pseudo += static_cast<uint32_t>(ip.dst[i] << 8 | ip.dst[i + 1]);
    }
    pseudo += static_cast<uint32_t>(seg.size());
    pseudo += protocol;
    FillTransportChecksum(bp, seg, pseudo);
  }

  size_t ext = ip.fragment ? kIpv6FragmentHeaderSize : 0;
  Put32(out, 0x60000000);
  Put16(out, static_cast<uint16_t>(ext + seg.size()));
  out.push_back(ip.fragment ? kIpv6NextFragment : protocol);
  out.push_back(ip.hop_limit);
  out.insert(out.end(), ip.src.begin(), ip.src.end());
  out.insert(out.end(), ip.dst.begin(), ip.dst.end());
  if (ip.fragment) {
    out.push_back(protocol);
    out.push_back(0);
    Put16(out, static_cast<uint16_t>((ip.fragment->fragment_offset << 3) |
                                     (ip.fragment->more_fragments ? 1 : 0)));
    Put32(out, ip.fragment->identification);
  }
  out.insert(out.end(), seg.begin(), seg.end());
}

}  // namespace

std::shared_ptr<const Signer> FixtureSigner() {
  static const auto signer =
      std::make_shared<Ed25519Signer>(Sha256(std::string_view("ctga fixture key")));
  return signer;
}

uint16_t InternetChecksum(ByteSpan data) {
  return ChecksumFinish(ChecksumAccumulate(data, 0));
}

RawPacket SerializePacket(const PacketBlueprint& bp) {
  Bytes out;
  out.insert(out.end(), bp.ethernet.dst.begin(), bp.ethernet.dst.end());
  out.insert(out.end(), bp.ethernet.src.begin(), bp.ethernet.src.end());
  bool v4 = std::holds_alternative<Ipv4Fields>(bp.ip);
  Put16(out, bp.ethernet.ethertype.value_or(v4 ? kEtherTypeIpv4 : kEtherTypeIpv6));
  if (v4) {
    AppendIpv4(bp, std::get<Ipv4Fields>(bp.ip), out);
  } else {
    AppendIpv6(bp, std::get<Ipv6Fields>(bp.ip), out);
  }
  if (out.size() < bp.min_frame_size) out.resize(bp.min_frame_size, 0);
  return out;
}

std::optional<Ipv4View> ParseIpv4Frame(ByteSpan frame) {
  if (frame.size() < kEthernetHeaderSize + kIpv4MinHeaderSize) return std::nullopt;
  if (Load16(frame, 12) != kEtherTypeIpv4) return std::nullopt;
  Ipv4View v;
  v.ip_offset = kEthernetHeaderSize;
  ByteSpan ip = frame.subspan(v.ip_offset);
  if ((ip[0] >> 4) != 4) return std::nullopt;
  v.header_length = static_cast<size_t>(ip[0] & 0x0f) * 4;
  if (v.header_length < kIpv4MinHeaderSize || ip.size() < v.header_length) {
    return std::nullopt;
  }
  v.total_length = Load16(ip, 2);
  if (v.total_length < v.header_length || v.total_length > ip.size()) {
    return std::nullopt;
  }
  v.identification = Load16(ip, 4);
  uint16_t flags = Load16(ip, 6);
  v.more_fragments = (flags & 0x2000) != 0;
  v.fragment_offset = flags & 0x1fff;
  v.protocol = ip[9];
  v.src = Load32(ip, 12);
  v.dst = Load32(ip, 16);
  return v;
}

RawPacket BuildSthPacket(std::string_view log_name, const SignedTreeHead& sth,
                         uint16_t txid, bool ipv6, size_t pad_to,
                         uint16_t ip_identification) {
  PacketBlueprint bp;
  DnsLimits limits;
  bp.payload = BuildSthResponse(log_name, sth, txid, limits, pad_to);
  if (ipv6) {
    bp.ip = Ipv6Fields{};
  } else {
    Ipv4Fields v4;
    v4.identification = ip_identification;
    bp.ip = v4;
  }
  return SerializePacket(bp);
}

RawPacket BuildSth411(std::string_view log_name, const SignedTreeHead& sth,
                      bool ipv6) {
  size_t headers = kEthernetHeaderSize +
                   (ipv6 ? kIpv6HeaderSize : kIpv4MinHeaderSize) + kUdpHeaderSize;
  RawPacket frame =
      BuildSthPacket(log_name, sth, 0x2a2a, ipv6, kSthFixtureSize - headers, 0x5151);
  return frame;
}

RawPacket BuildTinyFragment64(std::string_view log_name,
                              const SignedTreeHead& sth) {
  RawPacket full = BuildSth411(log_name, sth);
  auto parts = FragmentIpv4(full, {24, 0});
  parts[0].resize(kTinyFragmentSize, 0);
  return parts[0];
}

RawPacket BuildFixturePacket(FixtureKind kind, std::string_view log_name,
                             const SignedTreeHead& sth) {
  switch (kind) {
    case FixtureKind::kSth411:
      return BuildSth411(log_name, sth);
    case FixtureKind::kTinyFragment64:
      return BuildTinyFragment64(log_name, sth);
  }
  throw std::invalid_argument("unknown fixture kind");
}

std::vector<RawPacket> FragmentIpv4(ByteSpan frame,
                                    const std::vector<size_t>& sizes) {
  auto view = ParseIpv4Frame(frame);
  if (!view) throw std::invalid_argument("not an IPv4 frame");
  if (sizes.empty()) throw std::invalid_argument("no fragment sizes");
  ByteSpan header = frame.subspan(view->ip_offset, view->header_length);
  ByteSpan data = frame.subspan(view->ip_offset + view->header_length,
                                view->total_length - view->header_length);
  std::vector<RawPacket> out;
  size_t offset = 0;
  for (size_t i = 0; i < sizes.size(); ++i) {
    bool last = i + 1 == sizes.size();
    size_t len = last ? data.size() - offset : sizes[i];
    if (!last && (len % 8 != 0 || len == 0 || offset + len >= data.size())) {
      throw std::invalid_argument("fragment sizes do not tile the payload");
    }
    Bytes frag(frame.begin(), frame.begin() + static_cast<std::ptrdiff_t>(view->ip_offset));
    size_t ip_start = frag.size();
    frag.insert(frag.end(), header.begin(), header.end());
    Store16(frag, ip_start + 2, static_cast<uint16_t>(header.size() + len));
    uint16_t flags = static_cast<uint16_t>((last ? 0 : 0x2000) | ((offset / 8) & 0x1fff));
    Store16(frag, ip_start + 6, flags);
    Store16(frag, ip_start + 10, 0);
    Store16(frag, ip_start + 10,
            InternetChecksum(ByteSpan(frag).subspan(ip_start, header.size())));
    frag.insert(frag.end(), data.begin() + static_cast<std::ptrdiff_t>(offset),
                data.begin() + static_cast<std::ptrdiff_t>(offset + len));
    out.push_back(std::move(frag));
    offset += len;
  }
  return out;
}

SignedTreeHead FixtureSth(std::string_view log_name, uint64_t tree_size,
                          uint64_t timestamp) {
  auto signer = FixtureSigner();
  SignedTreeHead sth;
  sth.log_id = LogId::ForKey(std::string(log_name), signer->public_key());
  sth.tree_size = tree_size;
  sth.timestamp = timestamp;
  sth.root_hash = Sha256("fixture root " + std::to_string(tree_size));
  sth.signature =
      signer->Sign(SerializeTreeHead(sth.tree_size, sth.timestamp, sth.root_hash));
  return sth;
}

}  // namespace ctga
