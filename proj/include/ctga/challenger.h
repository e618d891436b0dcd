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

// Off-path verifier for aggregated STHs. Clones arrive one way from the
// aggregators; the challenger talks to logs only through an OffPathChannel.

#ifndef CTGA_CHALLENGER_H_
#define CTGA_CHALLENGER_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "ctga/crypto.h"
#include "ctga/dns_codec.h"
#include "ctga/merkle_log.h"

namespace ctga {

// Retryable failure of the off-path transport.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OffPathChannel {
 public:
  virtual ~OffPathChannel() = default;
  // Throws TransportError.
  virtual SignedTreeHead FetchSth(const std::string& log_name) = 0;
  // nullopt means the log refused or could not produce a proof.
  // Throws TransportError.
  virtual std::optional<std::vector<Digest>> GetConsistencyProof(
      const std::string& log_name, uint64_t first, uint64_t second) = 0;
};

// In-process binding: the log sees only |identity| and answers from the
// branch its fork policy assigns to that identity.
class MerkleLogChannel : public OffPathChannel {
 public:
  MerkleLogChannel(MerkleLog* log, std::string identity)
      : log_(log), identity_(std::move(identity)) {}
  SignedTreeHead FetchSth(const std::string& log_name) override;
  std::optional<std::vector<Digest>> GetConsistencyProof(
      const std::string& log_name, uint64_t first, uint64_t second) override;
  const std::string& identity() const { return identity_; }

 private:
  MerkleLog* log_;
  std::string identity_;
};

struct LogKey {
  std::string name;
  SignatureScheme scheme = SignatureScheme::kEd25519;
  Bytes public_key;

  LogId id() const { return LogId::ForKey(name, public_key); }
};

enum class SthSource { kAggregated, kOffPath };
std::string_view SthSourceName(SthSource s);

struct StoredSth {
  SignedTreeHead sth;
  uint64_t first_seen = 0;
  uint64_t last_seen = 0;
  uint64_t observation_count = 0;
  SthSource source = SthSource::kAggregated;  // of the first observation
};

enum class EvidenceKind { kEqualSizeDistinctRoots, kFailedConsistency };
std::string_view EvidenceKindName(EvidenceKind k);

struct Evidence {
  EvidenceKind kind = EvidenceKind::kEqualSizeDistinctRoots;
  std::string log_name;
  SignedTreeHead sth_a;
  SignedTreeHead sth_b;
  std::optional<std::vector<Digest>> proof;
  uint64_t detected_at = 0;
};

struct ChallengerConfig {
  uint64_t reassembly_timeout_ms = 30'000;
  size_t max_reassembly_buffers = 1024;
  uint64_t audit_period_ms = 24ull * 3600 * 1000;
  // Only STHs first seen at least this long ago are audited.
  uint64_t audit_delay_ms = 0;
  // More distinct heads than this within one window trips the anomaly counter.
  uint32_t sth_frequency = 24;
  uint64_t frequency_window_ms = 24ull * 3600 * 1000;
  DnsLimits limits;
};

struct ChallengerCounters {
  uint64_t clones = 0;
  uint64_t fragments = 0;
  uint64_t reassembled = 0;
  uint64_t reassembly_timeouts = 0;
  uint64_t reassembly_evictions = 0;
  uint64_t undecodable = 0;
  uint64_t unknown_log = 0;
  uint64_t quarantined = 0;
  uint64_t stored = 0;
  uint64_t duplicates = 0;
  uint64_t anomalies = 0;

  nlohmann::json ToJson() const;
};

// IP fragment reassembly keyed by (src, dst, protocol, identification).
class ReassemblyBuffer {
 public:
  ReassemblyBuffer(uint64_t timeout_ms, size_t max_buffers)
      : timeout_ms_(timeout_ms), max_buffers_(max_buffers) {}

  struct Datagram {
    uint8_t protocol = 0;
    Bytes payload;  // reassembled IP payload (transport header onwards)
  };

  // |key| identifies the datagram, |offset| is in bytes.
  std::optional<Datagram> Add(const std::string& key, uint8_t protocol,
                              size_t offset, bool more_fragments,
                              ByteSpan data, uint64_t now);
  // Discards buffers older than the timeout; returns how many.
  size_t Expire(uint64_t now);

  size_t size() const { return buffers_.size(); }
  uint64_t timeouts() const { return timeouts_; }
  uint64_t evictions() const { return evictions_; }

 private:
  struct Pending {
    uint64_t created = 0;
    uint8_t protocol = 0;
    std::optional<size_t> total;
    std::map<size_t, Bytes> pieces;
  };

  uint64_t timeout_ms_;
  size_t max_buffers_;
  std::map<std::string, Pending> buffers_;
  uint64_t timeouts_ = 0;
  uint64_t evictions_ = 0;
};

struct AuditResult {
  std::vector<Evidence> evidence;
  size_t proof_requests = 0;
  bool complete = true;
  // Index into the size-ordered pair list where a transport failure stopped
  // the audit; the next audit resumes there because verified pairs are
  // remembered.
  std::optional<size_t> resume_cursor;
  std::string error;
};

class Challenger {
 public:
  Challenger(ChallengerConfig config, std::vector<LogKey> logs);

  // Never throws on packet content.
  std::optional<SignedTreeHead> IngestClone(ByteSpan frame, uint64_t now);

  // Verifies and stores an STH for |log_name|; false if quarantined.
  bool Store(const std::string& log_name, SignedTreeHead sth, SthSource source,
             uint64_t now);

  // Throws TransportError; a bad signature is quarantined and reported as
  // TransportError too, so the caller retries.
  SignedTreeHead FetchOffPath(OffPathChannel& channel, const std::string& log_name,
                              uint64_t now);

  AuditResult Audit(OffPathChannel& channel, const std::string& log_name,
                    uint64_t now);

  bool AuditDue(uint64_t now) const;

  std::vector<StoredSth> Snapshot(const std::string& log_name) const;
  std::vector<Evidence> AllEvidence() const;
  ChallengerCounters counters() const;
  const std::vector<LogKey>& logs() const { return logs_; }
  const ChallengerConfig& config() const { return config_; }

  // Every store change is appended to |out| as one JSON line.
  void SetJournal(std::ostream* out) { journal_ = out; }
  // Replays a journal; returns the number of lines applied.
  size_t LoadJournal(std::istream& in);

 private:
  using StoreKey = std::pair<uint64_t, Digest>;  // (tree_size, root_hash)
  using PairKey = std::tuple<uint64_t, Digest, uint64_t, Digest>;

  const LogKey* FindLog(std::string_view name) const;
  std::optional<SignedTreeHead> HandleDatagram(uint8_t protocol, ByteSpan payload,
                                               uint64_t now);
  void Journal(const std::string& log_name, const StoredSth& s);
  void CountAnomaly(const std::string& log_name, const SignedTreeHead& sth);
  bool Record(Evidence e, AuditResult& result);

  ChallengerConfig config_;
  std::vector<LogKey> logs_;
  mutable std::mutex mu_;
  std::map<std::string, std::map<StoreKey, StoredSth>> store_;
  std::map<std::string, std::set<PairKey>> verified_pairs_;
  std::set<std::tuple<std::string, int, PairKey>> reported_;
  std::vector<Evidence> evidence_;
  ReassemblyBuffer reassembly_;
  ChallengerCounters counters_;
  std::optional<uint64_t> last_audit_;
  std::ostream* journal_ = nullptr;
};

nlohmann::json SthToJson(const SignedTreeHead& sth);
// Throws std::runtime_error on malformed input.
SignedTreeHead SthFromJson(const nlohmann::json& j);

// Self-contained report: full STHs, hex digests, base64 signatures.
nlohmann::json BuildReport(const std::vector<Evidence>& evidence,
                           const std::vector<LogKey>& logs, uint64_t generated_at,
                           const nlohmann::json& metadata = nlohmann::json::object());

struct FindingCheck {
  bool accepted = false;
  std::string reason;
};

// Re-checks every finding from the report and a map of trusted keys
// (name -> key); nothing from the challenger's state is consulted. A report
// is accepted only if every finding is.
std::vector<FindingCheck> ReverifyReport(const nlohmann::json& report,
                                         const std::map<std::string, LogKey>& keys);

}  // namespace ctga

#endif  // CTGA_CHALLENGER_H_
