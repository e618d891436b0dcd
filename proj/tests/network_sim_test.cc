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

#include "ctga/network_sim.h"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

namespace ctga {
namespace {

Scenario Load(const std::string& name) {
  std::ifstream in(std::string(CTGA_DATA_DIR) + "/scenarios/" + name + ".json");
  if (!in) throw std::runtime_error("missing scenario " + name);
  return ScenarioFromJson(nlohmann::json::parse(in));
}

std::map<std::string, LogKey> KeyMap(const SimReport& r) {
  std::map<std::string, LogKey> keys;
  for (const auto& k : r.log_keys) keys[k.name] = k;
  return keys;
}

TEST(NetworkSimTest, BundledForkIsDetected) {
  SimReport r = RunScenario(Load("fork"));
  ASSERT_TRUE(r.detected);
  ASSERT_TRUE(r.detection_audit.has_value());
  EXPECT_LE(*r.detection_audit, 2u);
  EXPECT_TRUE(r.client_covered.at("victim"));
  EXPECT_GT(r.EvidenceCount(), 0u);
  EXPECT_EQ(r.challengers[0].branches_seen, (std::set<std::string>{"a", "b"}));

  auto report = BuildReport(r.challengers[0].evidence, r.log_keys, 0);
  auto checks = ReverifyReport(report, KeyMap(r));
  ASSERT_EQ(checks.size(), r.challengers[0].evidence.size());
  for (const auto& c : checks) EXPECT_TRUE(c.accepted) << c.reason;
}

TEST(NetworkSimTest, HonestNeverDetects) {
  Scenario s = Load("honest");
  for (uint64_t seed = 0; seed < 25; ++seed) {
    s.seed = seed;
    SimReport r = RunScenario(s);
    EXPECT_FALSE(r.detected) << seed;
    EXPECT_EQ(r.EvidenceCount(), 0u);
    EXPECT_EQ(r.challengers[0].branches_seen, std::set<std::string>{"main"});
  }
}

TEST(NetworkSimTest, IsolatedClientIsNotProtected) {
  SimReport r = RunScenario(Load("isolated"));
  EXPECT_FALSE(r.detected);
  EXPECT_FALSE(r.client_covered.at("victim"));
  EXPECT_EQ(r.challengers[0].branches_seen, std::set<std::string>{"a"});
}

TEST(NetworkSimTest, ReportIsDeterministic) {
  Scenario s = Load("fork");
  EXPECT_EQ(RunScenario(s).ToJson().dump(), RunScenario(s).ToJson().dump());
  Scenario g = SymmetricGuessScenario(4);
  g.seed = 99;
  EXPECT_EQ(RunScenario(g).ToJson().dump(), RunScenario(g).ToJson().dump());
}

TEST(NetworkSimTest, ScenarioJsonRoundTrip) {
  Scenario s = Load("fork");
  nlohmann::json j = ScenarioToJson(s);
  EXPECT_EQ(ScenarioToJson(ScenarioFromJson(j)), j);
}

TEST(NetworkSimTest, MalformedTopologyIsRejected) {
  nlohmann::json base = ScenarioToJson(Load("fork"));
  auto expect_bad = [&](auto mutate) {
    nlohmann::json j = base;
    mutate(j);
    EXPECT_THROW(ScenarioFromJson(j), ScenarioError) << j.dump();
  };
  expect_bad([](auto& j) { j["challengers"][0]["aggregators"] = {"nowhere"}; });
  expect_bad([](auto& j) { j["challengers"][0]["identity"] = "stranger"; });
  expect_bad([](auto& j) { j["anonymity_pool"].push_back("isp-agg"); });
  expect_bad([](auto& j) { j["anonymity_pool"].push_back("anon-1"); });
  expect_bad([](auto& j) { j["clients"][0]["address"] = "not-an-ip"; });
  expect_bad([](auto& j) { j["rounds"] = 0; });
  expect_bad([](auto& j) { j["strategy"]["mode"] = "sneaky"; });
  expect_bad([](auto& j) { j["strategy"]["branch_map"]["10.9.9.9"] = "a"; });
  expect_bad([](auto& j) { j["aggregators"][0]["config"]["bogus"] = 1; });
  expect_bad([](auto& j) { j["clients"].push_back(j["clients"][0]); });
}

TEST(NetworkSimTest, AuditPeriodDelaysDetection) {
  Scenario s = Load("fork");
  s.rounds = 4;
  s.audit_period_rounds = 3;
  SimReport r = RunScenario(s);
  ASSERT_TRUE(r.detected);
  EXPECT_EQ(*r.detection_round, 2u);
  EXPECT_EQ(*r.detection_audit, 1u);
  EXPECT_EQ(r.challengers[0].audits, 1u);
}

TEST(NetworkSimTest, FragmentedResponsesStillReachTheChallenger) {
  Scenario s = Load("fork");
  s.clients[0].fragment_sizes = {8, 64};
  SimReport r = RunScenario(s);
  EXPECT_TRUE(r.detected);
  const auto& stats = r.aggregator_stats.at("isp-agg");
  ASSERT_TRUE(stats.verdicts.contains(Verdict::kCloneFragment));
  EXPECT_EQ(stats.verdicts.at(Verdict::kCloneFragment), 2 * s.rounds);  // the last size absorbs the rest
  EXPECT_EQ(r.challengers[0].counters.reassembled, s.rounds);
}

TEST(DetectionProbabilityTest, SingleIdentityAlwaysGuessed) {
  auto est = DetectionProbability(SymmetricGuessScenario(1), 200, 0);
  EXPECT_EQ(est.detections, 0u);
  EXPECT_EQ(EnumeratedDetectionProbability(SymmetricGuessScenario(1)), 0.0);
}

TEST(DetectionProbabilityTest, EnumerationMatchesAnalyticModel) {
  for (size_t k = 1; k <= 5; ++k) {
    EXPECT_NEAR(EnumeratedDetectionProbability(SymmetricGuessScenario(k)),
                1.0 - 1.0 / static_cast<double>(k), 1e-12)
        << k;
  }
}

TEST(DetectionProbabilityTest, FourIdentitiesMonteCarlo) {
  auto est = DetectionProbability(SymmetricGuessScenario(4), 10000, 7);
  EXPECT_NEAR(est.probability, 0.75, 0.05);
  EXPECT_GT(est.stderr_, 0.0);
  EXPECT_LT(est.stderr_, 0.01);
}

// Victim path crosses two aggregators, each feeding its own challenger; two
// decoy users share the pool and the attacker shows two identities the
// victim branch.
Scenario TwoCoveringAggregators() {
  Scenario s = SymmetricGuessScenario(1);
  s.name = "two-covering";
  s.clients[0].path = {"agg-0", "agg-1"};
  AggregatorSpec second{"agg-1", {}};
  second.config.known_logs = {s.log.name};
  s.aggregators.push_back(second);
  s.challengers.push_back({"challenger-1", {"agg-1"}, "anon-1"});
  s.anonymity_pool = {"anon-0", "anon-1", "decoy-0", "decoy-1"};
  s.strategy.guesses = 2;
  return s;
}

TEST(DetectionProbabilityTest, TwoCoveringAggregatorsMatchEnumeration) {
  Scenario s = TwoCoveringAggregators();
  double truth = EnumeratedDetectionProbability(s);
  EXPECT_NEAR(truth, 5.0 / 6.0, 1e-12);
  auto est = DetectionProbability(s, 3000, 11);
  EXPECT_NEAR(est.probability, truth, 0.05);
}

TEST(DetectionProbabilityTest, RejectsTooFewTrials) {
  EXPECT_THROW(DetectionProbability(SymmetricGuessScenario(2), 99, 0), ScenarioError);
}

// Random fork_static topologies: clients, hops, aggregators and challenger
// bindings all drawn from |rng|.
Scenario RandomForkScenario(std::mt19937_64& rng) {
  Scenario s;
  s.name = "random";
  s.log.scheme = SignatureScheme::kTestMac;
  s.rounds = 1 + rng() % 3;
  s.seed = rng();
  size_t hops = 1 + rng() % 4;
  size_t clients = 1 + rng() % 3;
  for (size_t c = 0; c < clients; ++c) {
    ClientSpec spec{"c" + std::to_string(c), "10.1.0." + std::to_string(c + 1), {}, {}};
    for (size_t h = 0; h < hops; ++h) {
      if (rng() % 2) spec.path.push_back("hop-" + std::to_string(h));
    }
    s.clients.push_back(spec);
  }
  for (size_t h = 0; h < hops; ++h) {
    if (rng() % 2 == 0) continue;
    AggregatorSpec a{"hop-" + std::to_string(h), {}};
    a.config.known_logs = {s.log.name};
    s.aggregators.push_back(a);
  }
  size_t pool = 2 + rng() % 3;
  for (size_t i = 0; i < pool; ++i) s.anonymity_pool.push_back("anon-" + std::to_string(i));
  size_t challengers = s.aggregators.empty() ? 0 : 1 + rng() % 2;
  for (size_t i = 0; i < challengers; ++i) {
    s.challengers.push_back({"ch" + std::to_string(i),
                             {s.aggregators[rng() % s.aggregators.size()].hop},
                             s.anonymity_pool[i]});
  }
  s.strategy.mode = AttackMode::kForkStatic;
  for (const auto& c : s.clients) {
    if (rng() % 2) s.strategy.branch_map[c.address] = "a";
  }
  for (const auto& id : s.anonymity_pool) {
    if (rng() % 2) s.strategy.branch_map[id] = "a";
  }
  return s;
}

TEST(NetworkSimPropertyTest, ChallengerHoldingTwoBranchesDetects) {
  std::mt19937_64 rng(2026);
  size_t multi_branch = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Scenario s = RandomForkScenario(rng);
    SimReport r = RunScenario(s);
    bool any_evidence = false;
    for (const auto& c : r.challengers) {
      if (c.branches_seen.size() >= 2) {
        ++multi_branch;
        EXPECT_FALSE(c.evidence.empty()) << ScenarioToJson(s).dump();
      }
      any_evidence |= !c.evidence.empty();
    }
    EXPECT_EQ(r.detected, any_evidence);
  }
  EXPECT_GT(multi_branch, 20u);
}

TEST(NetworkSimPropertyTest, AddingAnAggregatorNeverHidesAFork) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Scenario s = RandomForkScenario(rng);
    if (s.challengers.empty()) continue;
    bool before = RunScenario(s).detected;
    // New aggregator on a client path, feeding an existing challenger.
    Scenario more = s;
    AggregatorSpec extra{"extra-agg", {}};
    extra.config.known_logs = {s.log.name};
    more.aggregators.push_back(extra);
    more.clients[rng() % more.clients.size()].path.push_back("extra-agg");
    more.challengers[rng() % more.challengers.size()].aggregators.push_back("extra-agg");
    bool after = RunScenario(more).detected;
    EXPECT_TRUE(!before || after) << ScenarioToJson(s).dump();
  }
}

}  // namespace
}  // namespace ctga
