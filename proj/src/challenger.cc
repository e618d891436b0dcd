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

#include "ctga/challenger.h"

#include <algorithm>
#include <istream>
#include <ostream>

#include "ctga/packet.h"

namespace ctga {

namespace {

constexpr size_t kMaxDatagram = 65535;

uint16_t Load16(ByteSpan b, size_t i) {
  return static_cast<uint16_t>(b[i] << 8 | b[i + 1]);
}

std::string HexOf(ByteSpan b) { return HexEncode(b); }

Digest DigestFromHex(const std::string& hex) {
  auto b = HexDecode(hex);
  if (!b || b->size() != kDigestSize) throw std::runtime_error("digest must be 32 bytes");
  Digest d;
  std::copy(b->begin(), b->end(), d.begin());
  return d;
}

}  // namespace

SignedTreeHead MerkleLogChannel::FetchSth(const std::string& log_name) {
  if (log_name != log_->id().name) throw TransportError("no such log: " + log_name);
  auto sth = log_->ServeSth(identity_);
  if (!sth) throw TransportError("log has not issued an STH yet");
  return *sth;
}

std::optional<std::vector<Digest>> MerkleLogChannel::GetConsistencyProof(
    const std::string& log_name, uint64_t first, uint64_t second) {
  if (log_name != log_->id().name) throw TransportError("no such log: " + log_name);
  std::string branch = log_->BranchForClass(identity_);
  if (first > second || second > log_->TreeSize(branch)) return std::nullopt;
  return log_->ConsistencyProof(branch, first, second);
}

std::string_view SthSourceName(SthSource s) {
  return s == SthSource::kAggregated ? "aggregated" : "off_path";
}

std::string_view EvidenceKindName(EvidenceKind k) {
  return k == EvidenceKind::kEqualSizeDistinctRoots ? "equal_size_distinct_roots"
                                                    : "failed_consistency";
}

nlohmann::json ChallengerCounters::ToJson() const {
  return {{"clones", clones},
          {"fragments", fragments},
          {"reassembled", reassembled},
          {"reassembly_timeouts", reassembly_timeouts},
          {"reassembly_evictions", reassembly_evictions},
          {"undecodable", undecodable},
          {"unknown_log", unknown_log},
          {"quarantined", quarantined},
          {"stored", stored},
          {"duplicates", duplicates},
          {"anomalies", anomalies}};
}

std::optional<ReassemblyBuffer::Datagram> ReassemblyBuffer::Add(
    const std::string& key, uint8_t protocol, size_t offset, bool more_fragments,
    ByteSpan data, uint64_t now) {
  if (offset + data.size() > kMaxDatagram) return std::nullopt;
  auto it = buffers_.find(key);
  if (it == buffers_.end()) {
    if (buffers_.size() >= max_buffers_ && !buffers_.empty()) {
      auto oldest = std::min_element(
          buffers_.begin(), buffers_.end(),
          [](const auto& a, const auto& b) { return a.second.created < b.second.created; });
      buffers_.erase(oldest);
      ++evictions_;
    }
    it = buffers_.emplace(key, Pending{now, protocol, std::nullopt, {}}).first;
  }
  Pending& p = it->second;
  Bytes& slot = p.pieces[offset];
  if (data.size() > slot.size()) slot.assign(data.begin(), data.end());
  if (!more_fragments) p.total = offset + data.size();
  if (!p.total) return std::nullopt;

  size_t covered = 0;
  for (const auto& [off, bytes] : p.pieces) {
    if (off > covered) return std::nullopt;
    covered = std::max(covered, off + bytes.size());
  }
  if (covered < *p.total) return std::nullopt;

  Datagram d;
  d.protocol = p.protocol;
  d.payload.assign(*p.total, 0);
  for (const auto& [off, bytes] : p.pieces) {
    if (off >= *p.total) continue;
    size_t n = std::min(bytes.size(), *p.total - off);
    std::copy_n(bytes.begin(), n, d.payload.begin() + static_cast<std::ptrdiff_t>(off));
  }
  buffers_.erase(it);
  return d;
}

size_t ReassemblyBuffer::Expire(uint64_t now) {
  size_t n = std::erase_if(buffers_, [this, now](const auto& entry) {
    return now >= entry.second.created + timeout_ms_;
  });
  timeouts_ += n;
  return n;
}

Challenger::Challenger(ChallengerConfig config, std::vector<LogKey> logs)
    : config_(config),
      logs_(std::move(logs)),
      reassembly_(config.reassembly_timeout_ms, config.max_reassembly_buffers) {}

const LogKey* Challenger::FindLog(std::string_view name) const {
  for (const auto& k : logs_) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

std::optional<SignedTreeHead> Challenger::IngestClone(ByteSpan f, uint64_t now) {
  std::optional<ReassemblyBuffer::Datagram> datagram;
  {
    std::lock_guard lock(mu_);
    ++counters_.clones;
    reassembly_.Expire(now);
    counters_.reassembly_timeouts = reassembly_.timeouts();

    auto junk = [this]() -> std::optional<SignedTreeHead> {
      ++counters_.undecodable;
      return std::nullopt;
    };
    if (f.size() < kEthernetHeaderSize) return junk();
    uint16_t ethertype = Load16(f, 12);
    size_t ip = kEthernetHeaderSize;
    if (ethertype == kEtherTypeIpv4) {
      auto v = ParseIpv4Frame(f);
      if (!v || v->total_length < v->header_length) return junk();
      ByteSpan payload = f.subspan(ip + v->header_length, v->total_length - v->header_length);
      if (!v->more_fragments && v->fragment_offset == 0) {
        datagram = ReassemblyBuffer::Datagram{v->protocol, Bytes(payload.begin(), payload.end())};
      } else {
        ++counters_.fragments;
        std::string key(reinterpret_cast<const char*>(f.data() + ip + 12), 8);
        key = "4" + key + static_cast<char>(v->protocol) +
              static_cast<char>(v->identification >> 8) + static_cast<char>(v->identification);
        datagram = reassembly_.Add(key, v->protocol, v->fragment_offset * 8u,
                                   v->more_fragments, payload, now);
        if (!datagram) {
          counters_.reassembly_evictions = reassembly_.evictions();
          return std::nullopt;
        }
        ++counters_.reassembled;
      }
    } else if (ethertype == kEtherTypeIpv6) {
      if (f.size() < ip + kIpv6HeaderSize || (f[ip] >> 4) != 6) return junk();
      size_t length = Load16(f, ip + 4);
      if (f.size() < ip + kIpv6HeaderSize + length) return junk();
      ByteSpan payload = f.subspan(ip + kIpv6HeaderSize, length);
      uint8_t next = f[ip + 6];
      if (next != kIpv6NextFragment) {
        datagram = ReassemblyBuffer::Datagram{next, Bytes(payload.begin(), payload.end())};
      } else {
        if (payload.size() < kIpv6FragmentHeaderSize) return junk();
        ++counters_.fragments;
        uint8_t proto = payload[0];
        uint16_t off_flags = Load16(payload, 2);
        std::string key = "6" + std::string(reinterpret_cast<const char*>(f.data() + ip + 8), 32) +
                          std::string(reinterpret_cast<const char*>(payload.data() + 4), 4);
        datagram = reassembly_.Add(key, proto, off_flags & 0xfff8u, (off_flags & 1) != 0,
                                   payload.subspan(kIpv6FragmentHeaderSize), now);
        if (!datagram) {
          counters_.reassembly_evictions = reassembly_.evictions();
          return std::nullopt;
        }
        ++counters_.reassembled;
      }
    } else {
      return junk();
    }
  }
  return HandleDatagram(datagram->protocol, datagram->payload, now);
}

std::optional<SignedTreeHead> Challenger::HandleDatagram(uint8_t protocol, ByteSpan payload,
                                                         uint64_t now) {
  auto junk = [this]() -> std::optional<SignedTreeHead> {
    std::lock_guard lock(mu_);
    ++counters_.undecodable;
    return std::nullopt;
  };
  if (protocol != kIpProtoUdp || payload.size() < kUdpHeaderSize) return junk();
  size_t udp_length = Load16(payload, 4);
  if (udp_length < kUdpHeaderSize || udp_length > payload.size()) return junk();
  auto parsed = ParseDnsMessage(payload.subspan(kUdpHeaderSize, udp_length - kUdpHeaderSize),
                                config_.limits);
  if (!parsed.message) return junk();
  auto log_name = LogNameFromQuery(parsed.message->query_name);
  auto sth = DecodeSthTxt(parsed.message->txt_payload);
  if (!log_name || !sth) return junk();
  if (!FindLog(*log_name)) {
    std::lock_guard lock(mu_);
    ++counters_.unknown_log;
    return std::nullopt;
  }
  if (!Store(*log_name, *sth, SthSource::kAggregated, now)) return std::nullopt;
  sth->log_id = FindLog(*log_name)->id();
  return sth;
}

bool Challenger::Store(const std::string& log_name, SignedTreeHead sth, SthSource source,
                       uint64_t now) {
  const LogKey* key = FindLog(log_name);
  std::lock_guard lock(mu_);
  if (!key) {
    ++counters_.unknown_log;
    return false;
  }
  sth.log_id = key->id();
  if (!VerifySth(sth, key->scheme, key->public_key)) {
    ++counters_.quarantined;
    return false;
  }
  auto& entries = store_[log_name];
  StoreKey k{sth.tree_size, sth.root_hash};
  auto it = entries.find(k);
  if (it != entries.end()) {
    it->second.last_seen = std::max(it->second.last_seen, now);
    ++it->second.observation_count;
    ++counters_.duplicates;
  } else {
    it = entries.emplace(k, StoredSth{sth, now, now, 1, source}).first;
    ++counters_.stored;
    CountAnomaly(log_name, sth);
  }
  Journal(log_name, it->second);
  return true;
}

// More distinct heads in one window than an honest log may issue. Only
// windows containing the new head are examined.
void Challenger::CountAnomaly(const std::string& log_name, const SignedTreeHead& sth) {
  std::vector<uint64_t> times;
  for (const auto& [k, s] : store_[log_name]) times.push_back(s.sth.timestamp);
  std::sort(times.begin(), times.end());
  uint64_t window = config_.frequency_window_ms;
  for (size_t i = 0; i < times.size(); ++i) {
    uint64_t start = times[i];
    if (start > sth.timestamp || sth.timestamp - start >= window) continue;
    auto end = std::lower_bound(times.begin(), times.end(), start + window);
    if (static_cast<size_t>(end - (times.begin() + static_cast<std::ptrdiff_t>(i))) >
        config_.sth_frequency) {
      ++counters_.anomalies;
      return;
    }
  }
}

SignedTreeHead Challenger::FetchOffPath(OffPathChannel& channel, const std::string& log_name,
                                        uint64_t now) {
  SignedTreeHead sth = channel.FetchSth(log_name);
  if (!Store(log_name, sth, SthSource::kOffPath, now)) {
    throw TransportError("off-path STH for " + log_name + " failed verification");
  }
  sth.log_id = FindLog(log_name)->id();
  return sth;
}

bool Challenger::Record(Evidence e, AuditResult& result) {
  PairKey pk{e.sth_a.tree_size, e.sth_a.root_hash, e.sth_b.tree_size, e.sth_b.root_hash};
  std::lock_guard lock(mu_);
  if (!reported_.emplace(e.log_name, static_cast<int>(e.kind), pk).second) return false;
  evidence_.push_back(e);
  result.evidence.push_back(std::move(e));
  return true;
}

AuditResult Challenger::Audit(OffPathChannel& channel, const std::string& log_name,
                              uint64_t now) {
  AuditResult result;
  std::vector<StoredSth> entries;
  for (auto& s : Snapshot(log_name)) {
    if (s.first_seen + config_.audit_delay_ms <= now) entries.push_back(std::move(s));
  }
  {
    std::lock_guard lock(mu_);
    last_audit_ = now;
  }

  // Equal sizes with distinct roots need no log interaction.
  for (size_t i = 0; i < entries.size();) {
    size_t j = i + 1;
    while (j < entries.size() && entries[j].sth.tree_size == entries[i].sth.tree_size) {
      Record({EvidenceKind::kEqualSizeDistinctRoots, log_name, entries[i].sth,
              entries[j].sth, std::nullopt, now},
             result);
      ++j;
    }
    i = j;
  }

  for (size_t i = 0; i + 1 < entries.size(); ++i) {
    const SignedTreeHead& a = entries[i].sth;
    const SignedTreeHead& b = entries[i + 1].sth;
    if (a.tree_size == b.tree_size || a.tree_size == 0) continue;
    PairKey pk{a.tree_size, a.root_hash, b.tree_size, b.root_hash};
    {
      std::lock_guard lock(mu_);
      if (verified_pairs_[log_name].contains(pk)) continue;
    }
    std::optional<std::vector<Digest>> proof;
    try {
      ++result.proof_requests;
      proof = channel.GetConsistencyProof(log_name, a.tree_size, b.tree_size);
    } catch (const TransportError& e) {
      result.complete = false;
      result.resume_cursor = i;
      result.error = e.what();
      break;
    }
    if (proof && VerifyConsistency(a.root_hash, a.tree_size, b.root_hash, b.tree_size, *proof)) {
      std::lock_guard lock(mu_);
      verified_pairs_[log_name].insert(pk);
    } else {
      Record({EvidenceKind::kFailedConsistency, log_name, a, b, proof, now}, result);
    }
  }
  return result;
}

bool Challenger::AuditDue(uint64_t now) const {
  std::lock_guard lock(mu_);
  return !last_audit_ || now >= *last_audit_ + config_.audit_period_ms;
}

std::vector<StoredSth> Challenger::Snapshot(const std::string& log_name) const {
  std::lock_guard lock(mu_);
  std::vector<StoredSth> out;
  auto it = store_.find(log_name);
  if (it == store_.end()) return out;
  for (const auto& [k, s] : it->second) out.push_back(s);
  return out;
}

std::vector<Evidence> Challenger::AllEvidence() const {
  std::lock_guard lock(mu_);
  return evidence_;
}

ChallengerCounters Challenger::counters() const {
  std::lock_guard lock(mu_);
  return counters_;
}

void Challenger::Journal(const std::string& log_name, const StoredSth& s) {
  if (!journal_) return;
  nlohmann::json line = {{"log", log_name},
                         {"sth", SthToJson(s.sth)},
                         {"first_seen", s.first_seen},
                         {"last_seen", s.last_seen},
                         {"observation_count", s.observation_count},
                         {"source", SthSourceName(s.source)}};
  *journal_ << line.dump() << '\n';
}

size_t Challenger::LoadJournal(std::istream& in) {
  size_t applied = 0;
  std::string text;
  while (std::getline(in, text)) {
    if (text.empty()) continue;
    auto line = nlohmann::json::parse(text, nullptr, false);
    if (line.is_discarded()) throw std::runtime_error("journal: malformed line");
    std::string log_name = line.value("log", "");
    const LogKey* key = FindLog(log_name);
    if (!key) continue;
    SignedTreeHead sth = SthFromJson(line.at("sth"));
    if (sth.log_id.id != key->id().id) continue;
    sth.log_id = key->id();
    if (!VerifySth(sth, key->scheme, key->public_key)) continue;
    StoredSth s{sth, line.at("first_seen").get<uint64_t>(),
                line.at("last_seen").get<uint64_t>(),
                line.at("observation_count").get<uint64_t>(),
                line.at("source") == "off_path" ? SthSource::kOffPath : SthSource::kAggregated};
    std::lock_guard lock(mu_);
    store_[log_name][{sth.tree_size, sth.root_hash}] = s;
    ++applied;
  }
  return applied;
}

nlohmann::json SthToJson(const SignedTreeHead& sth) {
  return {{"log_id", HexOf(sth.log_id.id)},
          {"tree_size", sth.tree_size},
          {"timestamp", sth.timestamp},
          {"root_hash", HexOf(sth.root_hash)},
          {"signature", Base64Encode(sth.signature)}};
}

SignedTreeHead SthFromJson(const nlohmann::json& j) {
  try {
    SignedTreeHead sth;
    sth.log_id.id = DigestFromHex(j.at("log_id").get<std::string>());
    sth.tree_size = j.at("tree_size").get<uint64_t>();
    sth.timestamp = j.at("timestamp").get<uint64_t>();
    sth.root_hash = DigestFromHex(j.at("root_hash").get<std::string>());
    auto sig = Base64Decode(j.at("signature").get<std::string>());
    if (!sig) throw std::runtime_error("bad base64 signature");
    sth.signature = *sig;
    return sth;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("malformed STH: ") + e.what());
  }
}

nlohmann::json BuildReport(const std::vector<Evidence>& evidence,
                           const std::vector<LogKey>& logs, uint64_t generated_at,
                           const nlohmann::json& metadata) {
  nlohmann::json log_json = nlohmann::json::array();
  for (const auto& k : logs) {
    log_json.push_back({{"name", k.name},
                        {"log_id", HexOf(k.id().id)},
                        {"scheme", SignatureSchemeName(k.scheme)},
                        {"public_key", Base64Encode(k.public_key)}});
  }
  nlohmann::json findings = nlohmann::json::array();
  for (const auto& e : evidence) {
    nlohmann::json proof = nullptr;
    if (e.proof) {
      proof = nlohmann::json::array();
      for (const auto& d : *e.proof) proof.push_back(HexOf(d));
    }
    findings.push_back({{"kind", EvidenceKindName(e.kind)},
                        {"log", e.log_name},
                        {"detected_at", e.detected_at},
                        {"sth_a", SthToJson(e.sth_a)},
                        {"sth_b", SthToJson(e.sth_b)},
                        {"proof", proof}});
  }
  return {{"format", "ctga-report-v1"},
          {"generated_at", generated_at},
          {"metadata", metadata},
          {"logs", log_json},
          {"finding_count", evidence.size()},
          {"findings", findings}};
}

std::vector<FindingCheck> ReverifyReport(const nlohmann::json& report,
                                         const std::map<std::string, LogKey>& keys) {
  std::vector<FindingCheck> out;
  if (!report.is_object() || report.value("format", "") != "ctga-report-v1" ||
      !report.contains("findings") || !report["findings"].is_array()) {
    out.push_back({false, "not a report"});
    return out;
  }
  for (const auto& f : report["findings"]) {
    auto reject = [&out](std::string why) { out.push_back({false, std::move(why)}); };
    try {
      auto key_it = keys.find(f.at("log").get<std::string>());
      if (key_it == keys.end()) {
        reject("untrusted log");
        continue;
      }
      const LogKey& key = key_it->second;
      SignedTreeHead a = SthFromJson(f.at("sth_a"));
      SignedTreeHead b = SthFromJson(f.at("sth_b"));
      Digest expected_id = Sha256(key.public_key);
      if (a.log_id.id != expected_id || b.log_id.id != expected_id) {
        reject("log id does not match key");
        continue;
      }
      auto signed_ok = [&key](const SignedTreeHead& s) {
        return VerifySignature(key.scheme, key.public_key,
                               SerializeTreeHead(s.tree_size, s.timestamp, s.root_hash),
                               s.signature);
      };
      if (!signed_ok(a) || !signed_ok(b)) {
        reject("bad signature");
        continue;
      }
      std::string kind = f.at("kind").get<std::string>();
      if (kind == "equal_size_distinct_roots") {
        if (a.tree_size != b.tree_size) {
          reject("sizes differ");
        } else if (a.root_hash == b.root_hash) {
          reject("roots are equal");
        } else {
          out.push_back({true, "two signed heads of equal size with distinct roots"});
        }
      } else if (kind == "failed_consistency") {
        if (a.tree_size >= b.tree_size) {
          reject("sizes not increasing");
        } else if (f.at("proof").is_null()) {
          out.push_back({true, "log produced no consistency proof"});
        } else {
          std::vector<Digest> proof;
          for (const auto& d : f.at("proof")) proof.push_back(DigestFromHex(d.get<std::string>()));
          if (VerifyConsistency(a.root_hash, a.tree_size, b.root_hash, b.tree_size, proof)) {
            reject("proof verifies");
          } else {
            out.push_back({true, "supplied consistency proof fails"});
          }
        }
      } else {
        reject("unknown finding kind");
      }
    } catch (const std::exception& e) {
      reject(std::string("malformed finding: ") + e.what());
    }
  }
  return out;
}

}  // namespace ctga
