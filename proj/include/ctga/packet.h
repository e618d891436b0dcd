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

#ifndef CTGA_PACKET_H_
#define CTGA_PACKET_H_

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "ctga/crypto.h"
#include "ctga/dns_codec.h"
#include "ctga/merkle_log.h"

namespace ctga {

inline constexpr uint16_t kEtherTypeIpv4 = 0x0800;
inline constexpr uint16_t kEtherTypeIpv6 = 0x86dd;
inline constexpr uint8_t kIpProtoTcp = 6;
inline constexpr uint8_t kIpProtoUdp = 17;
inline constexpr uint8_t kIpv6NextFragment = 44;
inline constexpr size_t kEthernetHeaderSize = 14;
inline constexpr size_t kIpv4MinHeaderSize = 20;
inline constexpr size_t kIpv6HeaderSize = 40;
inline constexpr size_t kIpv6FragmentHeaderSize = 8;
inline constexpr size_t kUdpHeaderSize = 8;
inline constexpr size_t kTcpHeaderSize = 20;

using RawPacket = Bytes;
using MacAddress = std::array<uint8_t, 6>;
using Ipv6Address = std::array<uint8_t, 16>;

struct EthernetFields {
  MacAddress dst{0x02, 0, 0, 0, 0, 0x02};
  MacAddress src{0x02, 0, 0, 0, 0, 0x01};
  // Overrides the type implied by the network layer when set.
  std::optional<uint16_t> ethertype;
};

struct Ipv4Fields {
  uint32_t src = 0x08080808;  // 8.8.8.8
  uint32_t dst = 0xc0a80002;  // 192.168.0.2
  uint8_t ttl = 64;
  uint16_t identification = 0;
  bool dont_fragment = false;
  bool more_fragments = false;
  uint16_t fragment_offset = 0;  // in 8-byte units
  // Defaults to the transport's protocol; kRaw payloads default to UDP.
  std::optional<uint8_t> protocol;
  Bytes options;  // padded to a multiple of 4
};

struct Ipv6FragmentFields {
  uint16_t fragment_offset = 0;  // in 8-byte units
  bool more_fragments = false;
  uint32_t identification = 0;
};

struct Ipv6Fields {
  Ipv6Address src{0x20, 0x01, 0x48, 0x60, 0x48, 0x60, 0, 0, 0, 0, 0, 0, 0, 0, 0x88, 0x88};
  Ipv6Address dst{0x20, 0x01, 0x0d, 0xb8, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0x02};
  uint8_t hop_limit = 64;
  std::optional<uint8_t> next_header;  // as Ipv4Fields::protocol
  std::optional<Ipv6FragmentFields> fragment;
};

enum class Transport {
  kUdp,
  kTcp,
  // Payload is copied verbatim after the IP header (fragment bodies).
  kRaw,
};

struct PacketBlueprint {
  EthernetFields ethernet;
  std::variant<Ipv4Fields, Ipv6Fields> ip = Ipv4Fields{};
  Transport transport = Transport::kUdp;
  uint16_t src_port = 53;
  uint16_t dst_port = 33333;
  Bytes payload;
  // Zero bytes appended after the IP datagram to reach a minimum frame size.
  size_t min_frame_size = 0;
};

// Lengths and checksums are always computed from the actual byte counts.
RawPacket SerializePacket(const PacketBlueprint& blueprint);

uint16_t InternetChecksum(ByteSpan data);

// Parsed view of a link-layer frame, for tests and the challenger.
struct Ipv4View {
  size_t ip_offset = 0;
  size_t header_length = 0;
  uint16_t total_length = 0;
  uint16_t identification = 0;
  bool more_fragments = false;
  uint16_t fragment_offset = 0;
  uint8_t protocol = 0;
  uint32_t src = 0;
  uint32_t dst = 0;
};
std::optional<Ipv4View> ParseIpv4Frame(ByteSpan frame);

// The STH response as it leaves a CT-over-DNS resolver: Ethernet, IPv4 (or
// IPv6), UDP from port 53. Padded inside the TXT record to exactly 411 bytes.
inline constexpr size_t kSthFixtureSize = 411;
inline constexpr size_t kTinyFragmentSize = 64;

RawPacket BuildSthPacket(std::string_view log_name, const SignedTreeHead& sth,
                         uint16_t txid, bool ipv6 = false, size_t pad_to = 0,
                         uint16_t ip_identification = 0);
// Throws SizeError if the STH cannot fit 411 bytes.
RawPacket BuildSth411(std::string_view log_name, const SignedTreeHead& sth,
                      bool ipv6 = false);

// First fragment of an IPv4 STH datagram, carrying the UDP header and the
// start of the DNS message: 64 bytes on the wire, more-fragments set.
RawPacket BuildTinyFragment64(std::string_view log_name,
                              const SignedTreeHead& sth);

enum class FixtureKind { kSth411, kTinyFragment64 };
RawPacket BuildFixturePacket(FixtureKind kind, std::string_view log_name,
                             const SignedTreeHead& sth);
inline RawPacket BuildFixturePacket(const PacketBlueprint& blueprint) {
  return SerializePacket(blueprint);
}

// Splits an unfragmented IPv4 frame into fragments whose data sizes follow
// |sizes| (each but the last a multiple of 8; the last absorbs the rest).
// Throws std::invalid_argument on a frame that is not IPv4 or sizes that do
// not tile the payload.
std::vector<RawPacket> FragmentIpv4(ByteSpan frame,
                                    const std::vector<size_t>& sizes);

// Fixed Ed25519 key behind FixtureSth.
std::shared_ptr<const Signer> FixtureSigner();

// A deterministic STH signed with the fixture key.
SignedTreeHead FixtureSth(std::string_view log_name, uint64_t tree_size = 42,
                          uint64_t timestamp = 1528000000000);

}  // namespace ctga

#endif  // CTGA_PACKET_H_
