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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "ctga/packet.h"

namespace ctga {
namespace {

constexpr uint64_t kHour = 3600 * 1000;

std::shared_ptr<const Signer> MacSigner() {
  return std::make_shared<TestMacSigner>(Bytes{'p', 'i', 'l', 'o', 't'});
}

LogKey KeyFor(const MerkleLog& log) {
  return {log.id().name, log.signer().scheme(), log.signer().public_key()};
}

Bytes Leaf(const std::string& s) { return Bytes(s.begin(), s.end()); }

void Grow(MerkleLog& log, const std::string& branch, int n) {
  for (int i = 0; i < n; ++i) {
    log.Append(branch, Leaf(branch + std::to_string(log.TreeSize(branch))));
  }
}

RawPacket Frame(const SignedTreeHead& sth, const std::string& log = "pilot") {
  return BuildSth411(log, sth);
}

// Refuses after |budget| proof requests with a transport failure.
class FlakyChannel : public OffPathChannel {
 public:
  FlakyChannel(OffPathChannel& inner, int budget) : inner_(inner), budget_(budget) {}
  SignedTreeHead FetchSth(const std::string& log) override { return inner_.FetchSth(log); }
  std::optional<std::vector<Digest>> GetConsistencyProof(const std::string& log, uint64_t a,
                                                         uint64_t b) override {
    if (budget_-- <= 0) throw TransportError("circuit closed");
    ++calls;
    return inner_.GetConsistencyProof(log, a, b);
  }
  int calls = 0;

 private:
  OffPathChannel& inner_;
  int budget_;
};

class HonestLogTest : public ::testing::Test {
 protected:
  MerkleLog log_{"pilot", LogPolicy{}, MacSigner()};
  Challenger challenger_{ChallengerConfig{}, {KeyFor(log_)}};
  MerkleLogChannel channel_{&log_, "anon-1"};
  uint64_t now_ = 0;

  SignedTreeHead IssueAt(uint64_t size) {
    Grow(log_, "main", static_cast<int>(size - log_.TreeSize("main")));
    now_ += kHour;
    return log_.IssueSth("main", now_);
  }
};

TEST_F(HonestLogTest, DuplicateClonesAreCounted) {
  auto sth = IssueAt(5);
  auto first = challenger_.IngestClone(Frame(sth), 1);
  ASSERT_TRUE(first);
  EXPECT_EQ(*first, sth);
  challenger_.IngestClone(Frame(sth), 2);
  auto snap = challenger_.Snapshot("pilot");
  ASSERT_EQ(snap.size(), 1u);
  EXPECT_EQ(snap[0].observation_count, 2u);
  EXPECT_EQ(snap[0].first_seen, 1u);
  EXPECT_EQ(snap[0].last_seen, 2u);
  EXPECT_EQ(snap[0].source, SthSource::kAggregated);
}

TEST_F(HonestLogTest, FragmentPairInEitherOrder) {
  auto sth = IssueAt(7);
  auto parts = FragmentIpv4(Frame(sth), {16, 0});
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_FALSE(challenger_.IngestClone(parts[1], 10));
  auto got = challenger_.IngestClone(parts[0], 11);
  ASSERT_TRUE(got);
  EXPECT_EQ(*got, sth);

  Challenger other(ChallengerConfig{}, {KeyFor(log_)});
  EXPECT_FALSE(other.IngestClone(parts[0], 10));
  ASSERT_TRUE(other.IngestClone(parts[1], 11));
  EXPECT_EQ(other.counters().reassembled, 1u);
}

TEST_F(HonestLogTest, AnyFragmentationAnyOrder) {
  std::mt19937_64 rng(8);
  auto sth = IssueAt(3);
  RawPacket full = Frame(sth);
  size_t data = full.size() - 34;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<size_t> sizes;
    size_t used = 0;
    size_t pieces = 2 + rng() % 6;
    for (size_t i = 0; i + 1 < pieces; ++i) {
      size_t s = 8 * (1 + rng() % 8);
      if (used + s >= data) break;
      sizes.push_back(s);
      used += s;
    }
    sizes.push_back(0);
    auto parts = FragmentIpv4(full, sizes);
    ASSERT_GE(parts.size(), 2u);
    std::shuffle(parts.begin(), parts.end(), rng);
    Challenger c(ChallengerConfig{}, {KeyFor(log_)});
    std::optional<SignedTreeHead> got;
    for (size_t i = 0; i < parts.size(); ++i) {
      auto r = c.IngestClone(parts[i], 100);
      if (i + 1 < parts.size()) {
        ASSERT_FALSE(r);
      } else {
        got = r;
      }
    }
    ASSERT_TRUE(got) << trial;
    EXPECT_EQ(*got, sth);
  }
}

TEST_F(HonestLogTest, Ipv6Fragments) {
  auto sth = IssueAt(4);
  RawPacket whole = BuildSthPacket("pilot", sth, 1, true);
  ByteSpan segment = ByteSpan(whole).subspan(14 + 40);
  std::vector<RawPacket> parts;
  for (size_t off : {size_t{0}, size_t{48}}) {
    PacketBlueprint bp;
    Ipv6Fields ip;
    ip.fragment = Ipv6FragmentFields{static_cast<uint16_t>(off / 8), off == 0, 0xabcd};
    bp.ip = ip;
    bp.transport = Transport::kRaw;
    size_t end = off == 0 ? 48 : segment.size();
    bp.payload.assign(segment.begin() + static_cast<std::ptrdiff_t>(off),
                      segment.begin() + static_cast<std::ptrdiff_t>(end));
    parts.push_back(SerializePacket(bp));
  }
  EXPECT_FALSE(challenger_.IngestClone(parts[1], 1));
  auto got = challenger_.IngestClone(parts[0], 2);
  ASSERT_TRUE(got);
  EXPECT_EQ(*got, sth);
}

TEST_F(HonestLogTest, MissingFinalFragmentTimesOut) {
  auto parts = FragmentIpv4(Frame(IssueAt(2)), {16, 0});
  EXPECT_FALSE(challenger_.IngestClone(parts[0], 0));
  EXPECT_FALSE(challenger_.IngestClone(Bytes(10, 0), 30'000));
  EXPECT_EQ(challenger_.counters().reassembly_timeouts, 1u);
  // The late tail alone cannot complete the datagram.
  EXPECT_FALSE(challenger_.IngestClone(parts[1], 30'001));
  EXPECT_TRUE(challenger_.Snapshot("pilot").empty());
}

TEST(ReassemblyBufferTest, EvictsOldestWhenFull) {
  ReassemblyBuffer buf(30'000, 2);
  Bytes piece(8, 1);
  buf.Add("a", 17, 0, true, piece, 1);
  buf.Add("b", 17, 0, true, piece, 2);
  buf.Add("c", 17, 0, true, piece, 3);
  EXPECT_EQ(buf.size(), 2u);
  EXPECT_EQ(buf.evictions(), 1u);
  auto d = buf.Add("b", 17, 8, false, piece, 4);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->payload.size(), 16u);
  // "a" was evicted, so its tail alone does not complete.
  EXPECT_FALSE(buf.Add("a", 17, 8, false, piece, 5));
  EXPECT_EQ(buf.Expire(40'000), 2u);
  EXPECT_EQ(buf.timeouts(), 2u);
}

TEST(ReassemblyBufferTest, OverlapsAndGaps) {
  ReassemblyBuffer buf(30'000, 8);
  Bytes a = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
  EXPECT_FALSE(buf.Add("k", 17, 16, false, ByteSpan(a).first(8), 0));
  EXPECT_FALSE(buf.Add("k", 17, 0, true, ByteSpan(a).first(8), 0));  // gap at 8
  auto d = buf.Add("k", 17, 8, true, ByteSpan(a).subspan(0, 8), 0);
  ASSERT_TRUE(d);
  EXPECT_EQ(d->payload.size(), 24u);
}

TEST_F(HonestLogTest, QuarantineAndJunk) {
  auto sth = IssueAt(3);
  sth.signature[0] ^= 1;
  EXPECT_FALSE(challenger_.IngestClone(Frame(sth), 1));
  EXPECT_EQ(challenger_.counters().quarantined, 1u);
  EXPECT_TRUE(challenger_.Snapshot("pilot").empty());

  EXPECT_FALSE(challenger_.IngestClone(Bytes(3, 0), 1));
  EXPECT_FALSE(challenger_.IngestClone(Bytes(100, 0xff), 1));
  EXPECT_EQ(challenger_.counters().undecodable, 2u);

  EXPECT_FALSE(challenger_.IngestClone(Frame(FixtureSth("argon"), "argon"), 1));
  EXPECT_EQ(challenger_.counters().unknown_log, 1u);
}

TEST_F(HonestLogTest, FetchOffPathDedupsWithinSlot) {
  auto sth = IssueAt(4);
  EXPECT_EQ(challenger_.FetchOffPath(channel_, "pilot", 1), sth);
  challenger_.FetchOffPath(channel_, "pilot", 2);
  auto snap = challenger_.Snapshot("pilot");
  ASSERT_EQ(snap.size(), 1u);
  EXPECT_EQ(snap[0].observation_count, 2u);
  EXPECT_EQ(snap[0].source, SthSource::kOffPath);
  EXPECT_THROW(challenger_.FetchOffPath(channel_, "nope", 3), TransportError);
}

TEST_F(HonestLogTest, AuditChecksAdjacentPairs) {
  for (uint64_t size : {5, 8, 12}) challenger_.IngestClone(Frame(IssueAt(size)), now_);
  auto result = challenger_.Audit(channel_, "pilot", now_);
  EXPECT_TRUE(result.complete);
  EXPECT_EQ(result.proof_requests, 2u);
  EXPECT_TRUE(result.evidence.empty());
  // Verified pairs are not requested again.
  EXPECT_EQ(challenger_.Audit(channel_, "pilot", now_).proof_requests, 0u);
}

TEST_F(HonestLogTest, TransportFailureLeavesResumableAudit) {
  for (uint64_t size : {2, 4, 6, 8}) challenger_.IngestClone(Frame(IssueAt(size)), now_);
  FlakyChannel flaky(channel_, 1);
  auto partial = challenger_.Audit(flaky, "pilot", now_);
  EXPECT_FALSE(partial.complete);
  ASSERT_TRUE(partial.resume_cursor);
  EXPECT_EQ(*partial.resume_cursor, 1u);
  EXPECT_TRUE(partial.evidence.empty());
  FlakyChannel healthy(channel_, 100);
  auto rest = challenger_.Audit(healthy, "pilot", now_);
  EXPECT_TRUE(rest.complete);
  EXPECT_EQ(healthy.calls, 2);
}

TEST_F(HonestLogTest, AuditDelayAndPeriod) {
  ChallengerConfig config;
  config.audit_delay_ms = 10 * kHour;
  Challenger delayed(config, {KeyFor(log_)});
  delayed.IngestClone(Frame(IssueAt(3)), 0);
  delayed.IngestClone(Frame(IssueAt(9)), 0);
  EXPECT_TRUE(delayed.AuditDue(0));
  EXPECT_EQ(delayed.Audit(channel_, "pilot", kHour).proof_requests, 0u);
  EXPECT_FALSE(delayed.AuditDue(2 * kHour));
  EXPECT_TRUE(delayed.AuditDue(25 * kHour));
  EXPECT_EQ(delayed.Audit(channel_, "pilot", 25 * kHour).proof_requests, 1u);
}

TEST_F(HonestLogTest, AnomalyCounter) {
  for (int i = 0; i < 24; ++i) challenger_.IngestClone(Frame(IssueAt(i + 1)), now_);
  EXPECT_EQ(challenger_.counters().anomalies, 0u);
  // A 25th distinct head inside the same 24 hours is more than a policy-abiding
  // log can issue.
  MerkleLog fast("pilot", LogPolicy{std::chrono::hours(24), 100}, MacSigner());
  Grow(fast, "main", 30);
  challenger_.IngestClone(Frame(fast.IssueSth("main", 2 * kHour)), now_);
  EXPECT_EQ(challenger_.counters().anomalies, 1u);
}

TEST(SoundnessTest, HonestSchedulesNeverYieldEvidence) {
  std::mt19937_64 rng(9);
  for (int run = 0; run < 1000; ++run) {
    MerkleLog log("pilot", LogPolicy{}, MacSigner());
    Challenger c(ChallengerConfig{}, {KeyFor(log)});
    MerkleLogChannel channel(&log, "anon");
    uint64_t now = 0;
    int steps = 3 + static_cast<int>(rng() % 10);
    for (int s = 0; s < steps; ++s) {
      now += kHour;
      Grow(log, "main", static_cast<int>(rng() % 5));
      auto sth = log.IssueSth("main", now);
      switch (rng() % 3) {
        case 0:
          c.IngestClone(Frame(sth), now);
          break;
        case 1:
          c.FetchOffPath(channel, "pilot", now);
          break;
        default:
          break;
      }
      if (rng() % 4 == 0) ASSERT_TRUE(c.Audit(channel, "pilot", now).evidence.empty());
    }
    c.FetchOffPath(channel, "pilot", now);
    ASSERT_TRUE(c.Audit(channel, "pilot", now).evidence.empty()) << run;
  }
}

class ForkedLogTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Grow(log_, "main", 10);
    log_.Fork("a", "main");
    log_.Fork("b", "main");
    ForkPolicy policy;
    policy.mode = ForkMode::kForkByClientClass;
    policy.branch_assignment = {{"victim", "a"}, {"anon-1", "b"}};
    policy.default_branch = "b";
    log_.SetForkPolicy(policy);
  }

  MerkleLog log_{"pilot", LogPolicy{}, MacSigner()};
  Challenger challenger_{ChallengerConfig{}, {KeyFor(log_)}};
  MerkleLogChannel channel_{&log_, "anon-1"};
};

TEST_F(ForkedLogTest, EqualSizeDistinctRoots) {
  Grow(log_, "a", 2);
  Grow(log_, "b", 2);
  challenger_.IngestClone(Frame(log_.IssueSth("a", 1)), 1);
  challenger_.IngestClone(Frame(log_.IssueSth("b", 1)), 1);
  auto result = challenger_.Audit(channel_, "pilot", 5);
  ASSERT_EQ(result.evidence.size(), 1u);
  EXPECT_EQ(result.proof_requests, 0u);
  const Evidence& e = result.evidence[0];
  EXPECT_EQ(e.kind, EvidenceKind::kEqualSizeDistinctRoots);
  EXPECT_EQ(e.sth_a.tree_size, e.sth_b.tree_size);
  EXPECT_NE(e.sth_a.root_hash, e.sth_b.root_hash);
  EXPECT_EQ(e.detected_at, 5u);
  // Reported once.
  EXPECT_TRUE(challenger_.Audit(channel_, "pilot", 6).evidence.empty());
  EXPECT_EQ(challenger_.AllEvidence().size(), 1u);
}

TEST_F(ForkedLogTest, FetchUsesAssignedBranch) {
  Grow(log_, "a", 1);
  Grow(log_, "b", 3);
  log_.IssueSth("a", 1);
  auto b = log_.IssueSth("b", 1);
  EXPECT_EQ(challenger_.FetchOffPath(channel_, "pilot", 1), b);
  MerkleLogChannel as_victim(&log_, "victim");
  EXPECT_EQ(challenger_.FetchOffPath(as_victim, "pilot", 1).tree_size, 11u);
}

TEST_F(ForkedLogTest, FailedConsistencyAcrossBranches) {
  Grow(log_, "b", 4);
  auto victim_view = log_.IssueSth("a", 1);  // size 10 on a is the shared prefix
  Grow(log_, "a", 0);
  log_.Append("a", Leaf("evil"));
  victim_view = log_.IssueSth("a", 2);  // size 11, not a prefix of b
  log_.IssueSth("b", 2);
  challenger_.IngestClone(Frame(victim_view), 2);
  challenger_.FetchOffPath(channel_, "pilot", 3);
  auto result = challenger_.Audit(channel_, "pilot", 4);
  ASSERT_EQ(result.evidence.size(), 1u);
  EXPECT_EQ(result.evidence[0].kind, EvidenceKind::kFailedConsistency);
  EXPECT_EQ(result.evidence[0].sth_a.tree_size, 11u);
  EXPECT_EQ(result.evidence[0].sth_b.tree_size, 14u);
  ASSERT_TRUE(result.evidence[0].proof);

  std::map<std::string, LogKey> keys = {{"pilot", KeyFor(log_)}};
  auto report = BuildReport(result.evidence, challenger_.logs(), 4);
  auto checks = ReverifyReport(report, keys);
  ASSERT_EQ(checks.size(), 1u);
  EXPECT_TRUE(checks[0].accepted) << checks[0].reason;
}

TEST_F(ForkedLogTest, RefusedProofIsEvidence) {
  Grow(log_, "a", 6);
  Grow(log_, "b", 1);
  challenger_.IngestClone(Frame(log_.IssueSth("b", 1)), 1);  // size 11
  challenger_.IngestClone(Frame(log_.IssueSth("a", 1)), 1);  // size 16
  auto result = challenger_.Audit(channel_, "pilot", 2);     // b has no size 16
  ASSERT_EQ(result.evidence.size(), 1u);
  EXPECT_FALSE(result.evidence[0].proof);
  auto checks = ReverifyReport(BuildReport(result.evidence, challenger_.logs(), 2),
                               {{"pilot", KeyFor(log_)}});
  EXPECT_TRUE(checks[0].accepted);
}

TEST_F(ForkedLogTest, ReportReverification) {
  Grow(log_, "a", 1);
  Grow(log_, "b", 1);
  challenger_.IngestClone(Frame(log_.IssueSth("a", 1)), 1);
  challenger_.IngestClone(Frame(log_.IssueSth("b", 1)), 1);
  auto evidence = challenger_.Audit(channel_, "pilot", 2).evidence;
  std::map<std::string, LogKey> keys = {{"pilot", KeyFor(log_)}};

  auto report = BuildReport(evidence, challenger_.logs(), 2);
  auto text = report.dump();
  auto checks = ReverifyReport(nlohmann::json::parse(text), keys);
  ASSERT_EQ(checks.size(), 1u);
  EXPECT_TRUE(checks[0].accepted) << checks[0].reason;

  auto tampered = report;
  std::string root = tampered["findings"][0]["sth_b"]["root_hash"];
  root[0] = root[0] == '0' ? '1' : '0';
  tampered["findings"][0]["sth_b"]["root_hash"] = root;
  EXPECT_FALSE(ReverifyReport(tampered, keys)[0].accepted);

  auto same_roots = report;
  same_roots["findings"][0]["sth_b"] = same_roots["findings"][0]["sth_a"];
  EXPECT_FALSE(ReverifyReport(same_roots, keys)[0].accepted);

  std::map<std::string, LogKey> wrong = {
      {"pilot", {"pilot", SignatureScheme::kTestMac, Bytes{'x'}}}};
  EXPECT_FALSE(ReverifyReport(report, wrong)[0].accepted);
  EXPECT_FALSE(ReverifyReport(nlohmann::json::object(), keys)[0].accepted);
}

TEST(ReportTest, EmptyReport) {
  auto report = BuildReport({}, {}, 7, {{"audits", 1}});
  EXPECT_EQ(report["finding_count"], 0);
  EXPECT_TRUE(report["findings"].empty());
  EXPECT_EQ(report["generated_at"], 7);
  EXPECT_EQ(report["metadata"]["audits"], 1);
  EXPECT_TRUE(ReverifyReport(report, {}).empty());
}

TEST_F(HonestLogTest, JournalReplay) {
  std::stringstream journal;
  challenger_.SetJournal(&journal);
  auto a = IssueAt(3);
  auto b = IssueAt(6);
  challenger_.IngestClone(Frame(a), 1);
  challenger_.IngestClone(Frame(a), 2);
  challenger_.FetchOffPath(channel_, "pilot", 3);
  std::string text = journal.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);

  Challenger restored(ChallengerConfig{}, {KeyFor(log_)});
  std::stringstream in(text);
  EXPECT_EQ(restored.LoadJournal(in), 3u);
  auto x = restored.Snapshot("pilot");
  auto y = challenger_.Snapshot("pilot");
  ASSERT_EQ(x.size(), 2u);
  for (size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].sth, y[i].sth);
    EXPECT_EQ(x[i].observation_count, y[i].observation_count);
    EXPECT_EQ(x[i].source, y[i].source);
  }
  EXPECT_EQ(x[1].sth, b);
}

}  // namespace
}  // namespace ctga
