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

// Inline STH aggregation: a staged match+action classifier that forwards
// every packet untouched and clones STH responses and tiny fragments.

#ifndef CTGA_PIPELINE_H_
#define CTGA_PIPELINE_H_

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ctga/crypto.h"
#include "ctga/packet.h"

namespace ctga {

enum class Verdict { kPass, kCloneSth, kCloneFragment };
std::string_view VerdictName(Verdict v);

enum class RejectReason {
  kNone,
  kShortRead,
  kNotIp,
  kBadIpHeader,
  kLargeFragment,
  kNotUdp,
  kNotSourcePort53,
  kNotResponse,
  kQdAnMismatch,
  kOversized,
  kLabelBoundExceeded,
  kLabelTooLong,
  kCompressedName,
  kNotSthQuery,
  kUnknownLog,
  kWrongType,
  kWrongClass,
};
std::string_view RejectReasonName(RejectReason r);
inline constexpr int kRejectReasonCount = static_cast<int>(RejectReason::kWrongClass) + 1;

enum class Stage {
  kEthernet,
  kIpv4,
  kIpv6,
  kFragmentCheck,
  kUdp,
  kDnsPreamble,
  kDnsName,
  kDnsType,
  kDnsClass,
};
std::string_view StageName(Stage s);

struct StageVisit {
  Stage stage;
  size_t offset;  // byte offset into the frame where the stage starts

  friend bool operator==(const StageVisit&, const StageVisit&) = default;
};
using ParseTrace = std::vector<StageVisit>;

enum class SamplingMode { kCounter, kRandom };

struct PipelineConfig {
  std::set<std::string> known_logs;
  // A fragment is aggregated when its IP total length is below this.
  size_t fragment_threshold_bytes = 400;
  // Largest DNS message accepted as an STH response.
  size_t response_threshold_bytes = 400;
  uint64_t sampling_n = 1;
  size_t clone_channel_capacity = 1024;
  SamplingMode sampling_mode = SamplingMode::kCounter;
  uint64_t seed = 0;

  // Throws ConfigError.
  void Validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Keys: known_logs, fragment_threshold_bytes, response_threshold_bytes,
// sampling_n, clone_channel_capacity, sampling_mode ("counter"|"random"),
// seed. Missing keys keep their defaults; unknown keys are an error.
PipelineConfig PipelineConfigFromJson(const nlohmann::json& j);
nlohmann::json PipelineConfigToJson(const PipelineConfig& config);

struct Classification {
  Verdict verdict = Verdict::kPass;
  RejectReason reject = RejectReason::kNone;
  ParseTrace trace;
  std::string log_name;  // set when the query name had the STH shape
};

// Pure. Once the DNS preamble is reached the name, type and class stages are
// always visited, so the stage count does not depend on table lookups.
Classification Classify(ByteSpan frame, const PipelineConfig& config);
inline size_t StageCount(ByteSpan frame, const PipelineConfig& config) {
  return Classify(frame, config).trace.size();
}

struct CaptureMeta {
  uint64_t timestamp_us = 0;
  std::string ingress;
};

struct ClonedPacket {
  RawPacket bytes;
  Verdict verdict = Verdict::kPass;
  CaptureMeta meta;
  uint64_t match_index = 0;  // 1-based position among matches of this verdict
};

// Bounded single-producer handoff. Push never blocks; a full channel drops.
class CloneChannel {
 public:
  explicit CloneChannel(size_t capacity) : capacity_(capacity) {}
  bool TryPush(ClonedPacket clone);
  std::optional<ClonedPacket> TryPop();
  std::vector<ClonedPacket> Drain();
  size_t size() const;
  size_t capacity() const { return capacity_; }
  uint64_t dropped() const;

 private:
  size_t capacity_;
  mutable std::mutex mu_;
  std::deque<ClonedPacket> queue_;
  uint64_t dropped_ = 0;
};

struct PipelineStats {
  uint64_t packets = 0;
  std::map<Verdict, uint64_t> verdicts;
  std::map<RejectReason, uint64_t> rejects;
  std::map<size_t, uint64_t> stage_counts;
  uint64_t clones_emitted = 0;
  uint64_t clones_dropped = 0;

  nlohmann::json ToJson() const;
};

struct ProcessResult {
  RawPacket forwarded;
  Classification classification;
  bool sampled = false;       // selected by the every-n-th rule
  bool clone_dropped = false; // selected but the channel was full
};

// One instance per ingress queue; not thread-safe.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, std::shared_ptr<CloneChannel> channel);

  ProcessResult Process(ByteSpan frame, const CaptureMeta& meta = {});

  const PipelineConfig& config() const { return config_; }
  const PipelineStats& stats() const { return stats_; }
  CloneChannel& channel() { return *channel_; }

 private:
  bool Sample(Verdict v, uint64_t* index);

  PipelineConfig config_;
  std::shared_ptr<CloneChannel> channel_;
  PipelineStats stats_;
  uint64_t matches_sth_ = 0;
  uint64_t matches_fragment_ = 0;
  std::mt19937_64 rng_;
};

// Reads |input| completely (throwing PcapError before any processing), then
// writes the forwarded stream to |output| and sampled clones to |clones|.
PipelineStats RunPcap(const std::string& input, const std::string& output,
                      const std::string& clones, const PipelineConfig& config);

}  // namespace ctga

#endif  // CTGA_PIPELINE_H_
