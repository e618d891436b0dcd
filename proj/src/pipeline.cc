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

#include "ctga/pipeline.h"

#include "ctga/dns_codec.h"
#include "ctga/pcap.h"

namespace ctga {

namespace {

uint16_t Load16(ByteSpan b, size_t i) {
  return static_cast<uint16_t>(b[i] << 8 | b[i + 1]);
}

RejectReason FromDns(DnsReject r) {
  switch (r) {
    case DnsReject::kLabelBoundExceeded:
      return RejectReason::kLabelBoundExceeded;
    case DnsReject::kLabelTooLong:
      return RejectReason::kLabelTooLong;
    case DnsReject::kCompressedName:
      return RejectReason::kCompressedName;
    default:
      return RejectReason::kShortRead;
  }
}

// Where the transport header starts after the network stage.
struct NetworkResult {
  bool ok = false;
  RejectReason reject = RejectReason::kNone;
  bool fragment = false;
  size_t ip_total_length = 0;
  uint8_t protocol = 0;
  size_t transport_offset = 0;
  size_t datagram_end = 0;
};

NetworkResult ParseIpv4(ByteSpan f, size_t off) {
  NetworkResult n;
  if (f.size() < off + kIpv4MinHeaderSize) {
    n.reject = RejectReason::kShortRead;
    return n;
  }
  size_t ihl = static_cast<size_t>(f[off] & 0x0f) * 4;
  size_t total = Load16(f, off + 2);
  if ((f[off] >> 4) != 4 || ihl < kIpv4MinHeaderSize || total < ihl) {
    n.reject = RejectReason::kBadIpHeader;
    return n;
  }
  if (f.size() < off + total) {
    n.reject = RejectReason::kShortRead;
    return n;
  }
  uint16_t frag = Load16(f, off + 6);
  n.fragment = (frag & 0x2000) != 0 || (frag & 0x1fff) != 0;
  n.ip_total_length = total;
  n.protocol = f[off + 9];
  n.transport_offset = off + ihl;
  n.datagram_end = off + total;
  n.ok = true;
  return n;
}

NetworkResult ParseIpv6(ByteSpan f, size_t off) {
  NetworkResult n;
  if (f.size() < off + kIpv6HeaderSize) {
    n.reject = RejectReason::kShortRead;
    return n;
  }
  if ((f[off] >> 4) != 6) {
    n.reject = RejectReason::kBadIpHeader;
    return n;
  }
  size_t payload = Load16(f, off + 4);
  if (f.size() < off + kIpv6HeaderSize + payload) {
    n.reject = RejectReason::kShortRead;
    return n;
  }
  n.ip_total_length = kIpv6HeaderSize + payload;
  n.protocol = f[off + 6];
  n.transport_offset = off + kIpv6HeaderSize;
  n.datagram_end = off + n.ip_total_length;
  if (n.protocol == kIpv6NextFragment) {
    if (payload < kIpv6FragmentHeaderSize) {
      n.reject = RejectReason::kBadIpHeader;
      return n;
    }
    n.fragment = true;
    n.protocol = f[n.transport_offset];
    n.transport_offset += kIpv6FragmentHeaderSize;
  }
  n.ok = true;
  return n;
}

}  // namespace

std::string_view VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kPass:
      return "pass";
    case Verdict::kCloneSth:
      return "clone_sth";
    case Verdict::kCloneFragment:
      return "clone_fragment";
  }
  return "?";
}

std::string_view RejectReasonName(RejectReason r) {
  switch (r) {
    case RejectReason::kNone: return "none";
    case RejectReason::kShortRead: return "short_read";
    case RejectReason::kNotIp: return "not_ip";
    case RejectReason::kBadIpHeader: return "bad_ip_header";
    case RejectReason::kLargeFragment: return "large_fragment";
    case RejectReason::kNotUdp: return "not_udp";
    case RejectReason::kNotSourcePort53: return "not_source_port_53";
    case RejectReason::kNotResponse: return "not_response";
    case RejectReason::kQdAnMismatch: return "qd_an_mismatch";
    case RejectReason::kOversized: return "oversized";
    case RejectReason::kLabelBoundExceeded: return "label_bound_exceeded";
    case RejectReason::kLabelTooLong: return "label_too_long";
    case RejectReason::kCompressedName: return "compressed_name";
    case RejectReason::kNotSthQuery: return "not_sth_query";
    case RejectReason::kUnknownLog: return "unknown_log";
    case RejectReason::kWrongType: return "wrong_type";
    case RejectReason::kWrongClass: return "wrong_class";
  }
  return "?";
}

std::string_view StageName(Stage s) {
  switch (s) {
    case Stage::kEthernet: return "ethernet";
    case Stage::kIpv4: return "ipv4";
    case Stage::kIpv6: return "ipv6";
    case Stage::kFragmentCheck: return "fragment_check";
    case Stage::kUdp: return "udp";
    case Stage::kDnsPreamble: return "dns_preamble";
    case Stage::kDnsName: return "dns_name";
    case Stage::kDnsType: return "dns_type";
    case Stage::kDnsClass: return "dns_class";
  }
  return "?";
}

void PipelineConfig::Validate() const {
  if (sampling_n < 1) throw ConfigError("sampling_n must be at least 1");
  if (fragment_threshold_bytes == 0) {
    throw ConfigError("fragment_threshold_bytes must be positive");
  }
  if (response_threshold_bytes < kDnsHeaderSize) {
    throw ConfigError("response_threshold_bytes is smaller than a DNS header");
  }
  for (const auto& log : known_logs) {
    if (!IsValidLogName(log)) throw ConfigError("invalid log name: " + log);
  }
}

PipelineConfig PipelineConfigFromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("pipeline config must be a JSON object");
  PipelineConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "known_logs") {
        c.known_logs = value.get<std::set<std::string>>();
      } else if (key == "fragment_threshold_bytes") {
        c.fragment_threshold_bytes = value.get<size_t>();
      } else if (key == "response_threshold_bytes") {
        c.response_threshold_bytes = value.get<size_t>();
      } else if (key == "sampling_n") {
        c.sampling_n = value.get<uint64_t>();
      } else if (key == "clone_channel_capacity") {
        c.clone_channel_capacity = value.get<size_t>();
      } else if (key == "sampling_mode") {
        auto mode = value.get<std::string>();
        if (mode == "counter") {
          c.sampling_mode = SamplingMode::kCounter;
        } else if (mode == "random") {
          c.sampling_mode = SamplingMode::kRandom;
        } else {
          throw ConfigError("unknown sampling_mode: " + mode);
        }
      } else if (key == "seed") {
        c.seed = value.get<uint64_t>();
      } else {
        throw ConfigError("unknown pipeline config key: " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  c.Validate();
  return c;
}

nlohmann::json PipelineConfigToJson(const PipelineConfig& c) {
  return {{"known_logs", c.known_logs},
          {"fragment_threshold_bytes", c.fragment_threshold_bytes},
          {"response_threshold_bytes", c.response_threshold_bytes},
          {"sampling_n", c.sampling_n},
          {"clone_channel_capacity", c.clone_channel_capacity},
          {"sampling_mode", c.sampling_mode == SamplingMode::kCounter ? "counter" : "random"},
          {"seed", c.seed}};
}

Classification Classify(ByteSpan f, const PipelineConfig& config) {
  Classification c;
  auto visit = [&c](Stage s, size_t offset) { c.trace.push_back({s, offset}); };
  auto fail = [&c](RejectReason r) {
    c.verdict = Verdict::kPass;
    c.reject = r;
    return c;
  };

  visit(Stage::kEthernet, 0);
  if (f.size() < kEthernetHeaderSize) return fail(RejectReason::kShortRead);
  uint16_t ethertype = Load16(f, 12);
  NetworkResult net;
  if (ethertype == kEtherTypeIpv4) {
    visit(Stage::kIpv4, kEthernetHeaderSize);
    net = ParseIpv4(f, kEthernetHeaderSize);
  } else if (ethertype == kEtherTypeIpv6) {
    visit(Stage::kIpv6, kEthernetHeaderSize);
    net = ParseIpv6(f, kEthernetHeaderSize);
  } else {
    return fail(RejectReason::kNotIp);
  }
  if (!net.ok) return fail(net.reject);

  // Fragmented headers cannot be trusted statelessly, so fragments never
  // proceed to transport matching.
  visit(Stage::kFragmentCheck, net.transport_offset);
  if (net.fragment) {
    if (net.ip_total_length < config.fragment_threshold_bytes) {
      c.verdict = Verdict::kCloneFragment;
      return c;
    }
    return fail(RejectReason::kLargeFragment);
  }

  size_t udp = net.transport_offset;
  visit(Stage::kUdp, udp);
  if (net.protocol != kIpProtoUdp) return fail(RejectReason::kNotUdp);
  if (net.datagram_end < udp + kUdpHeaderSize) return fail(RejectReason::kShortRead);
  if (Load16(f, udp) != 53) return fail(RejectReason::kNotSourcePort53);
  size_t udp_length = Load16(f, udp + 4);
  if (udp_length < kUdpHeaderSize || udp + udp_length > net.datagram_end) {
    return fail(RejectReason::kShortRead);
  }
  size_t dns_offset = udp + kUdpHeaderSize;
  ByteSpan dns = f.subspan(dns_offset, udp_length - kUdpHeaderSize);

  visit(Stage::kDnsPreamble, dns_offset);
  if (dns.size() < kDnsHeaderSize) return fail(RejectReason::kShortRead);
  if ((dns[2] & 0x80) == 0) return fail(RejectReason::kNotResponse);
  if (Load16(dns, 4) != 1 || Load16(dns, 6) != 1) {
    return fail(RejectReason::kQdAnMismatch);
  }
  // Table checks below record the first failure but never stop the parse.
  RejectReason deferred = RejectReason::kNone;
  auto defer = [&deferred](RejectReason r) {
    if (deferred == RejectReason::kNone) deferred = r;
  };
  if (dns.size() > config.response_threshold_bytes) defer(RejectReason::kOversized);

  size_t pos = kDnsHeaderSize;
  visit(Stage::kDnsName, dns_offset + pos);
  std::string name;
  size_t iterations = 0;
  DnsLimits limits;
  limits.response_threshold = config.response_threshold_bytes;
  DnsReject name_result = ReadDnsName(dns, &pos, limits, &name, &iterations);
  if (name_result != DnsReject::kNone) return fail(FromDns(name_result));
  if (auto log = LogNameFromQuery(name)) {
    c.log_name = *log;
    if (!config.known_logs.contains(*log)) defer(RejectReason::kUnknownLog);
  } else {
    defer(RejectReason::kNotSthQuery);
  }

  visit(Stage::kDnsType, dns_offset + pos);
  if (dns.size() < pos + 4) return fail(RejectReason::kShortRead);
  if (Load16(dns, pos) != kDnsTypeTxt) defer(RejectReason::kWrongType);
  visit(Stage::kDnsClass, dns_offset + pos + 2);
  if (Load16(dns, pos + 2) != kDnsClassIn) defer(RejectReason::kWrongClass);

  if (deferred != RejectReason::kNone) return fail(deferred);
  c.verdict = Verdict::kCloneSth;
  return c;
}

bool CloneChannel::TryPush(ClonedPacket clone) {
  std::lock_guard lock(mu_);
  if (queue_.size() >= capacity_) {
    ++dropped_;
    return false;
  }
  queue_.push_back(std::move(clone));
  return true;
}

std::optional<ClonedPacket> CloneChannel::TryPop() {
  std::lock_guard lock(mu_);
  if (queue_.empty()) return std::nullopt;
  ClonedPacket out = std::move(queue_.front());
  queue_.pop_front();
  return out;
}

std::vector<ClonedPacket> CloneChannel::Drain() {
  std::lock_guard lock(mu_);
  std::vector<ClonedPacket> out(std::make_move_iterator(queue_.begin()),
                                std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

size_t CloneChannel::size() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

uint64_t CloneChannel::dropped() const {
  std::lock_guard lock(mu_);
  return dropped_;
}

nlohmann::json PipelineStats::ToJson() const {
  nlohmann::json verdict_json = nlohmann::json::object();
  for (Verdict v : {Verdict::kPass, Verdict::kCloneSth, Verdict::kCloneFragment}) {
    auto it = verdicts.find(v);
    verdict_json[std::string(VerdictName(v))] = it == verdicts.end() ? 0 : it->second;
  }
  nlohmann::json reject_json = nlohmann::json::object();
  for (const auto& [r, n] : rejects) reject_json[std::string(RejectReasonName(r))] = n;
  nlohmann::json stage_json = nlohmann::json::object();
  for (const auto& [s, n] : stage_counts) stage_json[std::to_string(s)] = n;
  return {{"packets", packets},
          {"verdicts", verdict_json},
          {"reject_reasons", reject_json},
          {"stage_counts", stage_json},
          {"clones_emitted", clones_emitted},
          {"clones_dropped", clones_dropped}};
}

Pipeline::Pipeline(PipelineConfig config, std::shared_ptr<CloneChannel> channel)
    : config_(std::move(config)), channel_(std::move(channel)), rng_(config_.seed) {
  config_.Validate();
  if (!channel_) channel_ = std::make_shared<CloneChannel>(config_.clone_channel_capacity);
}

bool Pipeline::Sample(Verdict v, uint64_t* index) {
  uint64_t& counter = v == Verdict::kCloneSth ? matches_sth_ : matches_fragment_;
  *index = ++counter;
  if (config_.sampling_mode == SamplingMode::kRandom) {
    return std::uniform_int_distribution<uint64_t>(0, config_.sampling_n - 1)(rng_) == 0;
  }
  return counter % config_.sampling_n == 0;
}

ProcessResult Pipeline::Process(ByteSpan frame, const CaptureMeta& meta) {
  ProcessResult result;
  result.forwarded.assign(frame.begin(), frame.end());
  result.classification = Classify(frame, config_);
  const Classification& c = result.classification;

  ++stats_.packets;
  ++stats_.verdicts[c.verdict];
  if (c.reject != RejectReason::kNone) ++stats_.rejects[c.reject];
  ++stats_.stage_counts[c.trace.size()];

  if (c.verdict != Verdict::kPass) {
    uint64_t index = 0;
    result.sampled = Sample(c.verdict, &index);
    if (result.sampled) {
      ClonedPacket clone{result.forwarded, c.verdict, meta, index};
      if (channel_->TryPush(std::move(clone))) {
        ++stats_.clones_emitted;
      } else {
        result.clone_dropped = true;
        ++stats_.clones_dropped;
      }
    }
  }
  return result;
}

PipelineStats RunPcap(const std::string& input, const std::string& output,
                      const std::string& clones, const PipelineConfig& config) {
  std::vector<PcapRecord> records = ReadPcapFile(input);
  std::ofstream out(output, std::ios::binary | std::ios::trunc);
  if (!out) throw PcapError("pcap: cannot create " + output);
  std::ofstream clone_out(clones, std::ios::binary | std::ios::trunc);
  if (!clone_out) throw PcapError("pcap: cannot create " + clones);
  PcapWriter out_writer(out);
  PcapWriter clone_writer(clone_out);

  Pipeline pipeline(config, std::make_shared<CloneChannel>(config.clone_channel_capacity));
  for (const auto& record : records) {
    auto result = pipeline.Process(record.data, {record.timestamp_us, "pcap"});
    out_writer.Write({record.timestamp_us, std::move(result.forwarded),
                      record.original_length});
    // The file writer is the consumer side of the channel.
    for (auto& clone : pipeline.channel().Drain()) {
      clone_writer.Write({clone.meta.timestamp_us, std::move(clone.bytes), 0});
    }
  }
  if (!out || !clone_out) throw PcapError("pcap: write failed");
  return pipeline.stats();
}

}  // namespace ctga
