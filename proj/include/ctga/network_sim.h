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

// Seeded round-based scenarios: clients fetch STHs over paths that may
// contain aggregators, challengers audit through anonymous off-path
// identities, and the log may split its view.

#ifndef CTGA_NETWORK_SIM_H_
#define CTGA_NETWORK_SIM_H_

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctga/challenger.h"
#include "ctga/pipeline.h"

namespace ctga {

struct ClientSpec {
  std::string id;
  std::string address;  // dotted IPv4; what the log observes
  std::vector<std::string> path;
  // When set, every STH response to this client is split into IPv4
  // fragments of these data sizes.
  std::vector<size_t> fragment_sizes;
};

struct AggregatorSpec {
  std::string hop;
  PipelineConfig config;
};

struct ChallengerSpec {
  std::string id;
  std::vector<std::string> aggregators;  // hops whose clones it receives
  std::string identity;                  // off-path identity from the pool
};

enum class AttackMode { kHonest, kForkStatic, kForkAdaptiveGuess };
std::string_view AttackModeName(AttackMode m);

struct AttackerStrategy {
  AttackMode mode = AttackMode::kHonest;
  // fork_static: observable identity (client address or off-path identity)
  // to branch. Unlisted identities get default_branch.
  std::map<std::string, std::string> branch_map;
  std::string default_branch = "b";
  // fork_adaptive_guess: clients shown the victim branch, and how many pool
  // identities the attacker also shows it to, chosen uniformly at random.
  std::vector<std::string> victims;
  std::string victim_branch = "a";
  size_t guesses = 1;
};

struct LogSpec {
  std::string name = "pilot";
  SignatureScheme scheme = SignatureScheme::kEd25519;
  uint64_t prefix_leaves = 10;  // common history before any fork
  uint64_t leaves_per_round = 1;
};

struct Scenario {
  std::string name;
  LogSpec log;
  std::vector<ClientSpec> clients;
  std::vector<AggregatorSpec> aggregators;
  std::vector<ChallengerSpec> challengers;
  // Off-path identities; those not bound to a challenger are other users.
  std::vector<std::string> anonymity_pool;
  AttackerStrategy strategy;
  uint64_t rounds = 2;
  uint64_t audit_period_rounds = 1;
  uint64_t seed = 0;

  // Throws ScenarioError.
  void Validate() const;
};

// Throws ScenarioError on malformed input.
Scenario ScenarioFromJson(const nlohmann::json& j);
nlohmann::json ScenarioToJson(const Scenario& s);

struct ChallengerOutcome {
  std::string id;
  std::string identity;
  std::vector<Evidence> evidence;
  std::set<std::string> branches_seen;  // branches of all stored STHs
  ChallengerCounters counters;
  size_t audits = 0;
  size_t transport_errors = 0;
};

struct SimReport {
  std::string scenario;
  uint64_t seed = 0;
  AttackMode mode = AttackMode::kHonest;
  uint64_t rounds = 0;
  bool detected = false;
  std::optional<uint64_t> detection_round;
  std::optional<size_t> detection_audit;  // 1-based audit number
  std::vector<ChallengerOutcome> challengers;
  std::map<std::string, bool> client_covered;
  std::map<std::string, PipelineStats> aggregator_stats;
  std::vector<std::string> guessed_identities;
  std::vector<LogKey> log_keys;

  size_t EvidenceCount() const;
  nlohmann::json ToJson() const;
};

SimReport RunScenario(const Scenario& scenario);
// Runs with the adaptive attacker's guess fixed instead of drawn.
SimReport RunScenarioWithGuess(const Scenario& scenario,
                               const std::vector<std::string>& guessed);

struct DetectionEstimate {
  double probability = 0;
  double stderr_ = 0;
  uint64_t trials = 0;
  uint64_t detections = 0;
};

// Monte Carlo over seeds seed, seed+1, ...; requires trials >= 100 and a
// fork_adaptive_guess scenario.
DetectionEstimate DetectionProbability(const Scenario& scenario, uint64_t trials,
                                       uint64_t seed);

// Exact value by running every possible guess set once.
double EnumeratedDetectionProbability(const Scenario& scenario);

// k challengers, each behind its own aggregator with one client; the first
// client is the victim. Pool is exactly the k challenger identities.
Scenario SymmetricGuessScenario(size_t k);

}  // namespace ctga

#endif  // CTGA_NETWORK_SIM_H_
