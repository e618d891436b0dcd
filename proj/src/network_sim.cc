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

#include <arpa/inet.h>

#include <cmath>
#include <random>

#include "ctga/dns_codec.h"
#include "ctga/packet.h"

namespace ctga {

namespace {

constexpr uint64_t kStartMs = 1'700'000'000'000;
constexpr uint64_t kRoundMs = 3600 * 1000;

std::optional<uint32_t> ParseAddress(const std::string& s) {
  in_addr addr{};
  if (inet_pton(AF_INET, s.c_str(), &addr) != 1) return std::nullopt;
  return ntohl(addr.s_addr);
}

std::shared_ptr<const Signer> SimSigner(const Scenario& s) {
  Digest seed = Sha256("ctga sim " + s.log.name + "/" + std::to_string(s.seed));
  if (s.log.scheme == SignatureScheme::kEd25519) return std::make_shared<Ed25519Signer>(seed);
  return std::make_shared<TestMacSigner>(Bytes(seed.begin(), seed.end()));
}

template <typename T>
T Get(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

std::string_view AttackModeName(AttackMode m) {
  switch (m) {
    case AttackMode::kHonest:
      return "honest";
    case AttackMode::kForkStatic:
      return "fork_static";
    case AttackMode::kForkAdaptiveGuess:
      return "fork_adaptive_guess";
  }
  return "?";
}

void Scenario::Validate() const {
  auto fail = [this](const std::string& why) {
    throw ScenarioError("scenario " + name + ": " + why);
  };
  if (!IsValidLogName(log.name)) fail("invalid log name");
  if (rounds == 0) fail("rounds must be positive");
  if (audit_period_rounds == 0) fail("audit_period_rounds must be positive");
  if (log.leaves_per_round == 0) fail("leaves_per_round must be positive");

  std::set<std::string> client_ids, addresses, hops;
  for (const auto& c : clients) {
    if (c.id.empty() || !client_ids.insert(c.id).second) fail("duplicate or empty client id");
    if (!ParseAddress(c.address)) fail("client " + c.id + " has a bad address");
    if (!addresses.insert(c.address).second) fail("duplicate client address " + c.address);
    hops.insert(c.path.begin(), c.path.end());
  }
  std::set<std::string> aggregator_hops;
  for (const auto& a : aggregators) {
    if (!aggregator_hops.insert(a.hop).second) fail("duplicate aggregator " + a.hop);
    try {
      a.config.Validate();
    } catch (const ConfigError& e) {
      fail(e.what());
    }
    hops.insert(a.hop);
  }
  std::set<std::string> pool(anonymity_pool.begin(), anonymity_pool.end());
  if (pool.size() != anonymity_pool.size()) fail("duplicate pool identity");
  for (const auto& id : pool) {
    if (client_ids.contains(id) || addresses.contains(id) || hops.contains(id)) {
      fail("pool identity " + id + " overlaps a client or hop");
    }
  }
  std::set<std::string> challenger_ids, identities;
  for (const auto& c : challengers) {
    if (c.id.empty() || !challenger_ids.insert(c.id).second) fail("duplicate challenger id");
    if (!pool.contains(c.identity)) fail("challenger " + c.id + " identity not in pool");
    if (!identities.insert(c.identity).second) fail("off-path identity shared by challengers");
    for (const auto& hop : c.aggregators) {
      if (!aggregator_hops.contains(hop)) fail("challenger " + c.id + " bound to unknown aggregator " + hop);
    }
  }

  const auto& st = strategy;
  switch (st.mode) {
    case AttackMode::kHonest:
      break;
    case AttackMode::kForkStatic: {
      if (!IsValidLogName(st.default_branch)) fail("bad default branch");
      for (const auto& [who, branch] : st.branch_map) {
        if (!IsValidLogName(branch) || branch == "main") fail("bad branch name " + branch);
        if (!addresses.contains(who) && !pool.contains(who)) fail("unknown identity " + who);
      }
      break;
    }
    case AttackMode::kForkAdaptiveGuess:
      if (!IsValidLogName(st.victim_branch) || !IsValidLogName(st.default_branch) ||
          st.victim_branch == st.default_branch || st.victim_branch == "main" ||
          st.default_branch == "main") {
        fail("adaptive strategy needs two distinct non-main branches");
      }
      for (const auto& v : st.victims) {
        if (!client_ids.contains(v)) fail("unknown victim " + v);
      }
      if (st.guesses > anonymity_pool.size()) fail("more guesses than pool identities");
      break;
  }
}

Scenario ScenarioFromJson(const nlohmann::json& j) {
  Scenario s;
  try {
    s.name = Get<std::string>(j, "name", "scenario");
    s.rounds = Get<uint64_t>(j, "rounds", 2);
    s.audit_period_rounds = Get<uint64_t>(j, "audit_period_rounds", 1);
    s.seed = Get<uint64_t>(j, "seed", 0);
    if (j.contains("log")) {
      const auto& l = j.at("log");
      s.log.name = Get<std::string>(l, "name", "pilot");
      auto scheme = ParseSignatureScheme(Get<std::string>(l, "scheme", "ed25519"));
      if (!scheme) throw ScenarioError("unknown signature scheme");
      s.log.scheme = *scheme;
      s.log.prefix_leaves = Get<uint64_t>(l, "prefix_leaves", 10);
      s.log.leaves_per_round = Get<uint64_t>(l, "leaves_per_round", 1);
    }
    for (const auto& c : j.value("clients", nlohmann::json::array())) {
      s.clients.push_back({c.at("id").get<std::string>(), c.at("address").get<std::string>(),
                           Get<std::vector<std::string>>(c, "path", {}),
                           Get<std::vector<size_t>>(c, "fragment_sizes", {})});
    }
    for (const auto& a : j.value("aggregators", nlohmann::json::array())) {
      AggregatorSpec spec{a.at("hop").get<std::string>(), {}};
      if (a.contains("config")) {
        spec.config = PipelineConfigFromJson(a.at("config"));
      } else {
        spec.config.known_logs = {s.log.name};
      }
      s.aggregators.push_back(std::move(spec));
    }
    for (const auto& c : j.value("challengers", nlohmann::json::array())) {
      s.challengers.push_back({c.at("id").get<std::string>(),
                               Get<std::vector<std::string>>(c, "aggregators", {}),
                               c.at("identity").get<std::string>()});
    }
    s.anonymity_pool = Get<std::vector<std::string>>(j, "anonymity_pool", {});
    if (j.contains("strategy")) {
      const auto& st = j.at("strategy");
      std::string mode = Get<std::string>(st, "mode", "honest");
      if (mode == "honest") {
        s.strategy.mode = AttackMode::kHonest;
      } else if (mode == "fork_static") {
        s.strategy.mode = AttackMode::kForkStatic;
      } else if (mode == "fork_adaptive_guess") {
        s.strategy.mode = AttackMode::kForkAdaptiveGuess;
      } else {
        throw ScenarioError("unknown strategy mode " + mode);
      }
      s.strategy.branch_map = Get<std::map<std::string, std::string>>(st, "branch_map", {});
      s.strategy.default_branch = Get<std::string>(st, "default_branch", "b");
      s.strategy.victims = Get<std::vector<std::string>>(st, "victims", {});
      s.strategy.victim_branch = Get<std::string>(st, "victim_branch", "a");
      s.strategy.guesses = Get<size_t>(st, "guesses", 1);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("scenario JSON: ") + e.what());
  } catch (const ConfigError& e) {
    throw ScenarioError(std::string("scenario aggregator config: ") + e.what());
  }
  s.Validate();
  return s;
}

nlohmann::json ScenarioToJson(const Scenario& s) {
  nlohmann::json clients = nlohmann::json::array();
  for (const auto& c : s.clients) {
    nlohmann::json cj = {{"id", c.id}, {"address", c.address}, {"path", c.path}};
    if (!c.fragment_sizes.empty()) cj["fragment_sizes"] = c.fragment_sizes;
    clients.push_back(cj);
  }
  nlohmann::json aggregators = nlohmann::json::array();
  for (const auto& a : s.aggregators) {
    aggregators.push_back({{"hop", a.hop}, {"config", PipelineConfigToJson(a.config)}});
  }
  nlohmann::json challengers = nlohmann::json::array();
  for (const auto& c : s.challengers) {
    challengers.push_back({{"id", c.id}, {"aggregators", c.aggregators}, {"identity", c.identity}});
  }
  return {{"name", s.name},
          {"rounds", s.rounds},
          {"audit_period_rounds", s.audit_period_rounds},
          {"seed", s.seed},
          {"log",
           {{"name", s.log.name},
            {"scheme", SignatureSchemeName(s.log.scheme)},
            {"prefix_leaves", s.log.prefix_leaves},
            {"leaves_per_round", s.log.leaves_per_round}}},
          {"clients", clients},
          {"aggregators", aggregators},
          {"challengers", challengers},
          {"anonymity_pool", s.anonymity_pool},
          {"strategy",
           {{"mode", AttackModeName(s.strategy.mode)},
            {"branch_map", s.strategy.branch_map},
            {"default_branch", s.strategy.default_branch},
            {"victims", s.strategy.victims},
            {"victim_branch", s.strategy.victim_branch},
            {"guesses", s.strategy.guesses}}}};
}

size_t SimReport::EvidenceCount() const {
  size_t n = 0;
  for (const auto& c : challengers) n += c.evidence.size();
  return n;
}

nlohmann::json SimReport::ToJson() const {
  nlohmann::json cj = nlohmann::json::array();
  for (const auto& c : challengers) {
    cj.push_back({{"id", c.id},
                  {"identity", c.identity},
                  {"evidence_count", c.evidence.size()},
                  {"branches_seen", c.branches_seen},
                  {"audits", c.audits},
                  {"transport_errors", c.transport_errors},
                  {"counters", c.counters.ToJson()},
                  {"report", BuildReport(c.evidence, log_keys, kStartMs + rounds * kRoundMs)}});
  }
  nlohmann::json agg = nlohmann::json::object();
  for (const auto& [hop, stats] : aggregator_stats) agg[hop] = stats.ToJson();
  return {{"scenario", scenario},
          {"seed", seed},
          {"strategy", AttackModeName(mode)},
          {"rounds", rounds},
          {"detected", detected},
          {"detection_round", detection_round ? nlohmann::json(*detection_round) : nlohmann::json()},
          {"detection_audit", detection_audit ? nlohmann::json(*detection_audit) : nlohmann::json()},
          {"evidence_count", EvidenceCount()},
          {"challengers", cj},
          {"client_covered", client_covered},
          {"aggregators", agg},
          {"guessed_identities", guessed_identities}};
}

namespace {

SimReport Run(const Scenario& s, const std::optional<std::vector<std::string>>& forced) {
  s.Validate();
  std::mt19937_64 rng(s.seed);
  SimReport report;
  report.scenario = s.name;
  report.seed = s.seed;
  report.mode = s.strategy.mode;
  report.rounds = s.rounds;

  auto signer = SimSigner(s);
  MerkleLog log(s.log.name, LogPolicy{}, signer);
  LogKey key{s.log.name, signer->scheme(), signer->public_key()};
  report.log_keys = {key};

  // Attacker's view: client addresses and pool identities only.
  std::vector<std::string> branches = {std::string(MerkleLog::kMainBranch)};
  ForkPolicy policy;
  if (s.strategy.mode != AttackMode::kHonest) {
    policy.mode = ForkMode::kForkByClientClass;
    policy.default_branch = s.strategy.default_branch;
    if (s.strategy.mode == AttackMode::kForkStatic) {
      policy.branch_assignment = s.strategy.branch_map;
    } else {
      for (const auto& victim : s.strategy.victims) {
        for (const auto& c : s.clients) {
          if (c.id == victim) policy.branch_assignment[c.address] = s.strategy.victim_branch;
        }
      }
      std::vector<std::string> guessed;
      if (forced) {
        guessed = *forced;
      } else {
        std::vector<std::string> pool = s.anonymity_pool;
        for (size_t i = 0; i < s.strategy.guesses; ++i) {
          size_t j = i + rng() % (pool.size() - i);
          std::swap(pool[i], pool[j]);
          guessed.push_back(pool[i]);
        }
      }
      for (const auto& id : guessed) policy.branch_assignment[id] = s.strategy.victim_branch;
      report.guessed_identities = guessed;
    }
    std::set<std::string> forked = {policy.default_branch};
    for (const auto& [who, branch] : policy.branch_assignment) forked.insert(branch);
    branches.assign(forked.begin(), forked.end());
  }

  for (uint64_t i = 0; i < s.log.prefix_leaves; ++i) {
    std::string leaf = "prefix/" + std::to_string(i);
    log.Append(MerkleLog::kMainBranch, AsBytes(leaf));
  }
  if (s.strategy.mode != AttackMode::kHonest) {
    for (const auto& b : branches) log.Fork(b, MerkleLog::kMainBranch);
  }
  log.SetForkPolicy(policy);

  std::map<std::string, std::unique_ptr<Pipeline>> pipelines;
  for (const auto& a : s.aggregators) {
    pipelines[a.hop] = std::make_unique<Pipeline>(
        a.config, std::make_shared<CloneChannel>(a.config.clone_channel_capacity));
  }
  for (const auto& c : s.clients) {
    bool covered = false;
    for (const auto& hop : c.path) covered |= pipelines.contains(hop);
    report.client_covered[c.id] = covered;
  }
  std::vector<std::unique_ptr<Challenger>> challengers;
  for (size_t i = 0; i < s.challengers.size(); ++i) {
    challengers.push_back(std::make_unique<Challenger>(ChallengerConfig{}, std::vector<LogKey>{key}));
    report.challengers.push_back({s.challengers[i].id, s.challengers[i].identity, {}, {}, {}, 0, 0});
  }
  std::map<Digest, std::string> branch_of_root;
  size_t audits_run = 0;

  for (uint64_t round = 0; round < s.rounds; ++round) {
    uint64_t now = kStartMs + round * kRoundMs;
    for (const auto& b : branches) {
      if (b == MerkleLog::kMainBranch && s.strategy.mode != AttackMode::kHonest) continue;
      for (uint64_t i = 0; i < s.log.leaves_per_round; ++i) {
        std::string leaf = b + "/" + std::to_string(round) + "/" + std::to_string(i);
        log.Append(b, AsBytes(leaf));
      }
      auto sth = log.IssueSth(b, now);
      branch_of_root[sth.root_hash] = b;
    }

    for (const auto& c : s.clients) {
      auto sth = log.ServeSth(c.address);
      if (!sth) continue;
      PacketBlueprint bp;
      Ipv4Fields ip;
      ip.dst = *ParseAddress(c.address);
      ip.identification = static_cast<uint16_t>(rng());
      bp.ip = ip;
      bp.payload = BuildSthResponse(s.log.name, *sth, static_cast<uint16_t>(rng()));
      std::vector<RawPacket> frames = {SerializePacket(bp)};
      if (!c.fragment_sizes.empty()) frames = FragmentIpv4(frames[0], c.fragment_sizes);
      for (const auto& hop : c.path) {
        auto it = pipelines.find(hop);
        if (it == pipelines.end()) continue;
        for (const auto& f : frames) it->second->Process(f, {now * 1000, hop});
      }
    }

    for (const auto& a : s.aggregators) {
      auto clones = pipelines[a.hop]->channel().Drain();
      for (size_t i = 0; i < s.challengers.size(); ++i) {
        const auto& bound = s.challengers[i].aggregators;
        if (std::find(bound.begin(), bound.end(), a.hop) == bound.end()) continue;
        for (const auto& clone : clones) challengers[i]->IngestClone(clone.bytes, now);
      }
    }

    if ((round + 1) % s.audit_period_rounds != 0) continue;
    ++audits_run;
    for (size_t i = 0; i < challengers.size(); ++i) {
      MerkleLogChannel channel(&log, s.challengers[i].identity);
      auto& outcome = report.challengers[i];
      try {
        challengers[i]->FetchOffPath(channel, s.log.name, now);
      } catch (const TransportError&) {
        ++outcome.transport_errors;
      }
      auto result = challengers[i]->Audit(channel, s.log.name, now);
      ++outcome.audits;
      if (!result.complete) ++outcome.transport_errors;
      for (auto& e : result.evidence) outcome.evidence.push_back(std::move(e));
      if (!outcome.evidence.empty() && !report.detected) {
        report.detected = true;
        report.detection_round = round;
        report.detection_audit = audits_run;
      }
    }
  }

  for (size_t i = 0; i < challengers.size(); ++i) {
    report.challengers[i].counters = challengers[i]->counters();
    for (const auto& stored : challengers[i]->Snapshot(s.log.name)) {
      auto it = branch_of_root.find(stored.sth.root_hash);
      if (it != branch_of_root.end()) report.challengers[i].branches_seen.insert(it->second);
    }
  }
  for (const auto& [hop, p] : pipelines) report.aggregator_stats[hop] = p->stats();
  return report;
}

}  // namespace

SimReport RunScenario(const Scenario& scenario) { return Run(scenario, std::nullopt); }

SimReport RunScenarioWithGuess(const Scenario& scenario, const std::vector<std::string>& guessed) {
  return Run(scenario, guessed);
}

DetectionEstimate DetectionProbability(const Scenario& scenario, uint64_t trials, uint64_t seed) {
  if (trials < 100) throw ScenarioError("detection probability needs at least 100 trials");
  if (scenario.strategy.mode != AttackMode::kForkAdaptiveGuess) {
    throw ScenarioError("detection probability needs a fork_adaptive_guess strategy");
  }
  DetectionEstimate est;
  est.trials = trials;
  Scenario s = scenario;
  for (uint64_t i = 0; i < trials; ++i) {
    s.seed = seed + i;
    est.detections += RunScenario(s).detected;
  }
  est.probability = static_cast<double>(est.detections) / static_cast<double>(trials);
  est.stderr_ = std::sqrt(est.probability * (1 - est.probability) / static_cast<double>(trials));
  return est;
}

double EnumeratedDetectionProbability(const Scenario& scenario) {
  const auto& pool = scenario.anonymity_pool;
  size_t g = scenario.strategy.guesses;
  if (g > pool.size()) throw ScenarioError("more guesses than pool identities");
  // Walk all g-subsets of the pool in lexicographic index order.
  std::vector<size_t> idx(g);
  for (size_t i = 0; i < g; ++i) idx[i] = i;
  uint64_t total = 0, detected = 0;
  while (true) {
    std::vector<std::string> guess;
    for (size_t i : idx) guess.push_back(pool[i]);
    ++total;
    detected += RunScenarioWithGuess(scenario, guess).detected;
    size_t i = g;
    while (i > 0 && idx[i - 1] == pool.size() - g + i - 1) --i;
    if (i == 0) break;
    ++idx[i - 1];
    for (size_t j = i; j < g; ++j) idx[j] = idx[j - 1] + 1;
  }
  return static_cast<double>(detected) / static_cast<double>(total);
}

Scenario SymmetricGuessScenario(size_t k) {
  Scenario s;
  s.name = "symmetric-guess-k" + std::to_string(k);
  s.log.scheme = SignatureScheme::kTestMac;
  s.rounds = 1;
  s.audit_period_rounds = 1;
  for (size_t i = 0; i < k; ++i) {
    std::string n = std::to_string(i);
    s.clients.push_back({"client-" + n, "10.0.0." + std::to_string(i + 1),
                         {"access-" + n, "agg-" + n, "core"}, {}});
    AggregatorSpec a{"agg-" + n, {}};
    a.config.known_logs = {s.log.name};
    s.aggregators.push_back(a);
    s.challengers.push_back({"challenger-" + n, {"agg-" + n}, "anon-" + n});
    s.anonymity_pool.push_back("anon-" + n);
  }
  s.strategy.mode = AttackMode::kForkAdaptiveGuess;
  s.strategy.victims = {"client-0"};
  return s;
}

}  // namespace ctga
