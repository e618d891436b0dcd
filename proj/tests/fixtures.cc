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

#include "fixtures.h"

#include "ctga/dns_codec.h"

namespace fixtures {

using ctga::Bytes;
using ctga::PacketBlueprint;
using ctga::RawPacket;

ctga::PipelineConfig DefaultConfig(uint64_t sampling_n) {
  ctga::PipelineConfig config;
  config.known_logs = {kKnownLog, "argon"};
  config.sampling_n = sampling_n;
  return config;
}

namespace {

RawPacket Wrap(Bytes dns, bool ipv6, ctga::Transport transport = ctga::Transport::kUdp) {
  PacketBlueprint bp;
  if (ipv6) bp.ip = ctga::Ipv6Fields{};
  bp.transport = transport;
  bp.payload = std::move(dns);
  return ctga::SerializePacket(bp);
}

Bytes SthMessage(const std::string& log, size_t pad_to, uint64_t size = 42) {
  return ctga::BuildSthResponse(log, ctga::FixtureSth(log, size), 0x2a2a, {}, pad_to);
}

// Offset of the question type within a message built by BuildSthResponse.
size_t QtypeOffset(const std::string& log) {
  return ctga::kDnsHeaderSize + ctga::SthQueryName(log).size() + 2;
}

}  // namespace

RawPacket SthVariant(Twin twin, bool ipv6, size_t pad_to) {
  switch (twin) {
    case Twin::kUnknownLog:
      // Same label length as the known log, so every offset is unchanged.
      return Wrap(SthMessage("zzzzz", pad_to), ipv6);
    case Twin::kWrongType: {
      Bytes m = SthMessage(kKnownLog, pad_to);
      m[QtypeOffset(kKnownLog) + 1] = 1;  // A
      return Wrap(std::move(m), ipv6);
    }
    case Twin::kWrongClass: {
      Bytes m = SthMessage(kKnownLog, pad_to);
      m[QtypeOffset(kKnownLog) + 3] = 3;  // CH
      return Wrap(std::move(m), ipv6);
    }
  }
  return {};
}

std::vector<MatchedPair> MatchedTwins() {
  std::vector<MatchedPair> out;
  const std::pair<Twin, ctga::RejectReason> twins[] = {
      {Twin::kUnknownLog, ctga::RejectReason::kUnknownLog},
      {Twin::kWrongType, ctga::RejectReason::kWrongType},
      {Twin::kWrongClass, ctga::RejectReason::kWrongClass},
  };
  const char* twin_names[] = {"unknown_log", "wrong_type", "wrong_class"};
  for (bool ipv6 : {false, true}) {
    for (size_t pad : {size_t{0}, size_t{369}}) {
      if (ipv6 && pad) pad = 411 - 14 - 40 - 8;
      RawPacket matched = Wrap(SthMessage(kKnownLog, pad), ipv6);
      for (size_t i = 0; i < 3; ++i) {
        std::string name = std::string(ipv6 ? "ipv6" : "ipv4") +
                           (pad ? "_411_" : "_plain_") + twin_names[i];
        out.push_back({name, matched, SthVariant(twins[i].first, ipv6, pad),
                       twins[i].second});
      }
    }
  }
  RawPacket golden = ctga::BuildSth411(kKnownLog, ctga::FixtureSth(kKnownLog));
  out.push_back({"golden_411_unknown_log", golden,
                 ctga::BuildSth411("zzzzz", ctga::FixtureSth("zzzzz")),
                 ctga::RejectReason::kUnknownLog});
  return out;
}

RawPacket FragmentProbe(bool more_fragments, uint16_t offset_units,
                        size_t total_length) {
  PacketBlueprint bp;
  ctga::Ipv4Fields ip;
  ip.more_fragments = more_fragments;
  ip.fragment_offset = offset_units;
  ip.identification = 0x77;
  bp.ip = ip;
  bp.transport = ctga::Transport::kRaw;
  bp.payload.assign(total_length - ctga::kIpv4MinHeaderSize, 0x5a);
  return ctga::SerializePacket(bp);
}

RawPacket BackgroundPacket(std::mt19937_64& rng) {
  auto random_payload = [&rng](size_t n) {
    Bytes b(n);
    for (auto& x : b) x = static_cast<uint8_t>(rng());
    return b;
  };
  switch (rng() % 7) {
    case 0: {  // other UDP service
      PacketBlueprint bp;
      bp.src_port = static_cast<uint16_t>(1024 + rng() % 60000);
      bp.payload = random_payload(rng() % 500);
      return ctga::SerializePacket(bp);
    }
    case 1: {  // TCP from port 53
      PacketBlueprint bp;
      bp.transport = ctga::Transport::kTcp;
      bp.payload = SthMessage(kKnownLog, 0);
      return ctga::SerializePacket(bp);
    }
    case 2: {  // ARP
      Bytes f(60, 0);
      f[12] = 0x08;
      f[13] = 0x06;
      return f;
    }
    case 3: {  // client query towards a resolver
      PacketBlueprint bp;
      bp.src_port = 33333;
      bp.dst_port = 53;
      bp.payload = ctga::BuildDnsQuery(ctga::SthQueryName(kKnownLog), 1);
      return ctga::SerializePacket(bp);
    }
    case 4: {  // unrelated DNS response (wrong name shape)
      Bytes m = SthMessage(kKnownLog, 0);
      m[ctga::kDnsHeaderSize + 1] = 'x';
      return Wrap(std::move(m), rng() % 2);
    }
    case 5: {  // IPv6 UDP
      PacketBlueprint bp;
      bp.ip = ctga::Ipv6Fields{};
      bp.src_port = 443;
      bp.payload = random_payload(rng() % 900);
      return ctga::SerializePacket(bp);
    }
    default: {  // large non-tiny fragment
      return FragmentProbe(true, 0, 600 + 8 * (rng() % 100));
    }
  }
}

RawPacket FuzzFrame(std::mt19937_64& rng) {
  if (rng() % 2 == 0) {
    RawPacket f(rng() % 1600);
    for (auto& b : f) b = static_cast<uint8_t>(rng());
    if (f.size() >= 14 && rng() % 2) {
      f[12] = rng() % 2 ? 0x08 : 0x86;
      f[13] = f[12] == 0x08 ? 0x00 : 0xdd;
    }
    return f;
  }
  RawPacket f;
  switch (rng() % 3) {
    case 0:
      f = ctga::BuildSth411(kKnownLog, ctga::FixtureSth(kKnownLog, rng() % 1000));
      break;
    case 1:
      f = ctga::BuildSth411(kKnownLog, ctga::FixtureSth(kKnownLog), true);
      break;
    default:
      f = ctga::BuildTinyFragment64(kKnownLog, ctga::FixtureSth(kKnownLog));
  }
  int flips = 1 + static_cast<int>(rng() % 6);
  for (int i = 0; i < flips; ++i) f[rng() % f.size()] = static_cast<uint8_t>(rng());
  if (rng() % 5 == 0) f.resize(rng() % f.size());
  return f;
}

}  // namespace fixtures
