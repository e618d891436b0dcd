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

#include "ctga/merkle_log.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

namespace ctga {
namespace {

constexpr uint64_t kHour = 3600 * 1000;

std::shared_ptr<const Signer> MacSigner() {
  return std::make_shared<TestMacSigner>(Bytes{'k', 'e', 'y'});
}

MerkleLog MakeLog(std::string name = "pilot") {
  return MerkleLog(std::move(name), LogPolicy{}, MacSigner());
}

Bytes LeafBytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

TEST(MerkleLogTest, LogNames) {
  EXPECT_TRUE(IsValidLogName("pilot"));
  EXPECT_TRUE(IsValidLogName("argon2026"));
  EXPECT_TRUE(IsValidLogName("x-y"));
  EXPECT_FALSE(IsValidLogName(""));
  EXPECT_FALSE(IsValidLogName("Pilot"));
  EXPECT_FALSE(IsValidLogName("a.b"));
  EXPECT_FALSE(IsValidLogName("-a"));
  EXPECT_FALSE(IsValidLogName(std::string(64, 'a')));
  EXPECT_THROW(MakeLog("Bad Name"), ScenarioError);
}

TEST(MerkleLogTest, AppendCountsAndKeepsHistory) {
  MerkleLog log = MakeLog();
  EXPECT_EQ(log.Append("main", LeafBytes("a")), 1u);
  Digest root1 = log.RootAt("main", 1);
  EXPECT_EQ(log.Append("main", LeafBytes("b")), 2u);
  EXPECT_EQ(log.RootAt("main", 1), root1);
  EXPECT_THROW(log.Append("nope", LeafBytes("c")), ScenarioError);
  EXPECT_THROW(log.RootAt("main", 3), std::out_of_range);
}

TEST(MerkleLogTest, EmptyLogSth) {
  MerkleLog log = MakeLog();
  SignedTreeHead sth = log.IssueSth("main", 0);
  EXPECT_EQ(sth.tree_size, 0u);
  EXPECT_EQ(sth.timestamp, 0u);
  EXPECT_EQ(sth.root_hash, HashEmpty());
  EXPECT_EQ(sth.log_id, log.id());
  EXPECT_TRUE(VerifySth(sth, SignatureScheme::kTestMac, log.signer().public_key()));
}

TEST(MerkleLogTest, FrequencyBudgetPerMmd) {
  MerkleLog log = MakeLog();
  ASSERT_EQ(log.policy().sth_frequency, 24u);
  ASSERT_EQ(log.policy().mmd, std::chrono::hours(24));
  for (int i = 0; i < 24; ++i) {
    log.Append("main", LeafBytes(std::to_string(i)));
    log.IssueSth("main", i * 60 * 1000);
  }
  EXPECT_FALSE(log.CanIssue("main", 24 * 60 * 1000));
  EXPECT_THROW(log.IssueSth("main", 24 * 60 * 1000), PolicyError);
  // The window slides: 24h after the first issuance there is budget again.
  EXPECT_NO_THROW(log.IssueSth("main", 24 * kHour));
}

TEST(MerkleLogTest, HourlyIssuanceNeverExceedsBudget) {
  MerkleLog log = MakeLog();
  for (uint64_t h = 0; h < 24 * 5; ++h) {
    log.Append("main", LeafBytes(std::to_string(h)));
    ASSERT_NO_THROW(log.IssueSth("main", h * kHour)) << h;
  }
}

TEST(MerkleLogTest, ReissueWithoutAppendKeepsHead) {
  MerkleLog log = MakeLog();
  log.Append("main", LeafBytes("a"));
  auto first = log.IssueSth("main", 100);
  auto second = log.IssueSth("main", 200);
  EXPECT_EQ(first.tree_size, second.tree_size);
  EXPECT_EQ(first.root_hash, second.root_hash);
  EXPECT_NE(first.timestamp, second.timestamp);
}

TEST(MerkleLogTest, SignatureBindsEveryField) {
  MerkleLog log = MakeLog();
  for (int i = 0; i < 5; ++i) log.Append("main", LeafBytes(std::to_string(i)));
  SignedTreeHead sth = log.IssueSth("main", 12345);
  Bytes key = log.signer().public_key();
  ASSERT_TRUE(VerifySth(sth, SignatureScheme::kTestMac, key));

  auto altered = sth;
  altered.tree_size++;
  EXPECT_FALSE(VerifySth(altered, SignatureScheme::kTestMac, key));
  altered = sth;
  altered.timestamp++;
  EXPECT_FALSE(VerifySth(altered, SignatureScheme::kTestMac, key));
  for (size_t bit = 0; bit < 256; ++bit) {
    altered = sth;
    altered.root_hash[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
    EXPECT_FALSE(VerifySth(altered, SignatureScheme::kTestMac, key));
  }
}

TEST(MerkleLogTest, SerializedTreeHeadLayout) {
  Digest root{};
  root[0] = 0xaa;
  Bytes s = SerializeTreeHead(0x0102, 0x0304, root);
  ASSERT_EQ(s.size(), 49u);
  EXPECT_EQ(s[0], 0x00);
  EXPECT_EQ(s[7], 0x01);
  EXPECT_EQ(s[8], 0x02);
  EXPECT_EQ(s[15], 0x03);
  EXPECT_EQ(s[16], 0x04);
  EXPECT_EQ(s[17], 0xaa);
}

TEST(MerkleLogTest, Ed25519SignedSth) {
  Bytes seed(32, 7);
  auto signer = std::make_shared<Ed25519Signer>(seed);
  MerkleLog log("argon", LogPolicy{}, signer);
  log.Append("main", LeafBytes("x"));
  auto sth = log.IssueSth("main", 1);
  EXPECT_EQ(sth.signature.size(), 64u);
  EXPECT_TRUE(VerifySth(sth, SignatureScheme::kEd25519, signer->public_key()));
  EXPECT_EQ(log.id().id, Sha256(signer->public_key()));
}

TEST(MerkleLogTest, HonestServesSameSthToEveryone) {
  MerkleLog log = MakeLog();
  log.Append("main", LeafBytes("a"));
  log.IssueSth("main", 5);
  auto a = log.ServeSth("victim");
  auto b = log.ServeSth("monitor");
  ASSERT_TRUE(a && b);
  EXPECT_EQ(*a, *b);
}

class ForkedLogTest : public ::testing::Test {
 protected:
  void SetUp() override {
    for (int i = 0; i < 10; ++i) log_.Append("main", LeafBytes("c" + std::to_string(i)));
    log_.Fork("a", "main");
    log_.Fork("b", "main");
    for (int i = 0; i < 4; ++i) {
      log_.Append("a", LeafBytes("a" + std::to_string(i)));
      log_.Append("b", LeafBytes("b" + std::to_string(i)));
    }
    ForkPolicy policy;
    policy.mode = ForkMode::kForkByClientClass;
    policy.branch_assignment = {{"victim", "a"}, {"monitor", "b"}};
    policy.default_branch = "b";
    log_.SetForkPolicy(policy);
  }

  MerkleLog log_ = MakeLog();
};

TEST_F(ForkedLogTest, ClassesSeeDivergentHeads) {
  log_.IssueSth("a", 1);
  log_.IssueSth("b", 1);
  auto victim = log_.ServeSth("victim");
  auto monitor = log_.ServeSth("monitor");
  ASSERT_TRUE(victim && monitor);
  EXPECT_EQ(victim->tree_size, monitor->tree_size);
  EXPECT_NE(victim->root_hash, monitor->root_hash);
  EXPECT_EQ(log_.BranchForClass("stranger"), "b");
  // Common prefix is shared.
  EXPECT_EQ(log_.RootAt("a", 10), log_.RootAt("b", 10));
}

TEST_F(ForkedLogTest, SameClassStaysConsistent) {
  auto first = log_.IssueSth("a", 1);
  log_.Append("a", LeafBytes("more"));
  auto second = log_.IssueSth("a", 2);
  EXPECT_EQ(*log_.ServeSth("victim"), second);
  auto proof = log_.ConsistencyProof("a", first.tree_size, second.tree_size);
  EXPECT_TRUE(VerifyConsistency(first.root_hash, first.tree_size,
                                second.root_hash, second.tree_size, proof));
}

TEST_F(ForkedLogTest, BranchesAreIndividuallyAppendOnly) {
  for (const auto& branch : log_.Branches()) {
    uint64_t size = log_.TreeSize(branch);
    for (uint64_t m = 0; m <= size; ++m) {
      for (uint64_t n = m; n <= size; ++n) {
        ASSERT_TRUE(VerifyConsistency(log_.RootAt(branch, m), m,
                                      log_.RootAt(branch, n), n,
                                      log_.ConsistencyProof(branch, m, n)));
      }
    }
  }
}

TEST_F(ForkedLogTest, CrossBranchProofFails) {
  auto proof = log_.ConsistencyProof("b", 12, 14);
  EXPECT_FALSE(VerifyConsistency(log_.RootAt("a", 12), 12,
                                 log_.RootAt("b", 14), 14, proof));
}

TEST_F(ForkedLogTest, PolicyValidation) {
  EXPECT_THROW(log_.SetForkPolicy(ForkPolicy{}), ScenarioError);
  ForkPolicy bad;
  bad.mode = ForkMode::kForkByClientClass;
  bad.branch_assignment = {{"x", "zzz"}};
  EXPECT_THROW(log_.SetForkPolicy(bad), ScenarioError);
  EXPECT_THROW(log_.Fork("a", "main"), ScenarioError);
}

TEST_F(ForkedLogTest, LogFileRoundTrip) {
  std::stringstream file;
  WriteLogFile(log_, file);
  MerkleLog loaded = ReadLogFile(file, MacSigner());
  EXPECT_EQ(loaded.id(), log_.id());
  EXPECT_EQ(loaded.Branches(), log_.Branches());
  for (const auto& branch : log_.Branches()) {
    EXPECT_EQ(loaded.TreeSize(branch), log_.TreeSize(branch));
    EXPECT_EQ(loaded.RootAt(branch, loaded.TreeSize(branch)),
              log_.RootAt(branch, log_.TreeSize(branch)));
  }
  EXPECT_EQ(loaded.BranchForClass("victim"), "a");
  EXPECT_EQ(loaded.fork_policy().default_branch, "b");

  // Header plus 10 main leaves and 4 per forked branch.
  std::stringstream again;
  WriteLogFile(loaded, again);
  EXPECT_EQ(again.str(), file.str());
  std::string text = file.str();
  size_t lines = std::count(text.begin(), text.end(), '\n');
  EXPECT_EQ(lines, 1u + 10 + 4 + 4);
}

TEST(LogFileTest, RejectsCorruptInput) {
  std::stringstream empty;
  EXPECT_THROW(ReadLogFile(empty, MacSigner()), std::runtime_error);
  std::stringstream bad_header("{\"format\":\"other\"}\n");
  EXPECT_THROW(ReadLogFile(bad_header, MacSigner()), std::runtime_error);

  MerkleLog log = MakeLog();
  log.Append("main", LeafBytes("a"));
  std::stringstream file;
  WriteLogFile(log, file);
  std::string text = file.str();
  std::stringstream truncated(text.substr(0, text.find('\n') + 1));
  EXPECT_THROW(ReadLogFile(truncated, MacSigner()), std::runtime_error);
  std::stringstream wrong_key(text);
  EXPECT_THROW(ReadLogFile(wrong_key, std::make_shared<TestMacSigner>(Bytes{1})),
               std::runtime_error);
}

}  // namespace
}  // namespace ctga
