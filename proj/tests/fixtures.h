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

// Packet corpora shared by the pipeline tests and the acceptance suite.

#ifndef CTGA_TESTS_FIXTURES_H_
#define CTGA_TESTS_FIXTURES_H_

#include <random>
#include <string>
#include <vector>

#include "ctga/packet.h"
#include "ctga/pipeline.h"

namespace fixtures {

inline constexpr char kKnownLog[] = "pilot";

ctga::PipelineConfig DefaultConfig(uint64_t sampling_n = 1);

enum class Twin { kUnknownLog, kWrongType, kWrongClass };

struct MatchedPair {
  std::string name;
  ctga::RawPacket matched;
  ctga::RawPacket unmatched;
  ctga::RejectReason expected_reject;
};

// Every STH-matching fixture (IPv4/IPv6, 411-byte and unpadded, several tree
// sizes) paired with each single-field perturbation.
std::vector<MatchedPair> MatchedTwins();

// A frame identical to an STH response except for one table value.
ctga::RawPacket SthVariant(Twin twin, bool ipv6 = false, size_t pad_to = 0);

// IPv4 datagram with raw payload so that the IP total length equals
// |total_length|.
ctga::RawPacket FragmentProbe(bool more_fragments, uint16_t offset_units,
                              size_t total_length);

// Assorted non-STH traffic: other UDP services, TCP, ARP, DNS answers for
// unrelated names, queries, truncated frames.
ctga::RawPacket BackgroundPacket(std::mt19937_64& rng);

// Random bytes, or a valid fixture with random corruption.
ctga::RawPacket FuzzFrame(std::mt19937_64& rng);

}  // namespace fixtures

#endif  // CTGA_TESTS_FIXTURES_H_
