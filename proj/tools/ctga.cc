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

// ctga: one binary, one subcommand per workflow. Exit status is 0 on
// success, 1 on usage errors and 2 on data errors.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "ctga/challenger.h"
#include "ctga/coverage.h"
#include "ctga/logserve.h"
#include "ctga/network_sim.h"
#include "ctga/packet.h"
#include "ctga/pcap.h"
#include "ctga/pipeline.h"

namespace {

using namespace ctga;

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

// Raised for bad flag values that CLI11 cannot check on its own.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

uint64_t NowMs() {
  return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                   std::chrono::system_clock::now().time_since_epoch())
                                   .count());
}

nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

// Reports go to |path|, or stdout when it is empty or "-".
void Emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    OpenOut(path) << text;
  }
}

// Demo keys are derived from the log name unless a seed is given.
std::shared_ptr<const Signer> MakeSigner(const std::string& scheme_name, const std::string& seed_hex,
                                         const std::string& log_name) {
  auto scheme = ParseSignatureScheme(scheme_name);
  if (!scheme) throw UsageError("unknown signature scheme " + scheme_name);
  Bytes seed;
  if (seed_hex.empty()) {
    Digest d = Sha256("ctga demo key/" + log_name);
    seed.assign(d.begin(), d.end());
  } else {
    auto decoded = HexDecode(seed_hex);
    if (!decoded || decoded->size() != 32) throw UsageError("--key-seed must be 64 hex digits");
    seed = *decoded;
  }
  if (*scheme == SignatureScheme::kEd25519) return std::make_shared<Ed25519Signer>(seed);
  return std::make_shared<TestMacSigner>(seed);
}

nlohmann::json KeysJson(const std::vector<LogKey>& keys) {
  nlohmann::json logs = nlohmann::json::array();
  for (const auto& k : keys) {
    logs.push_back({{"name", k.name},
                    {"scheme", SignatureSchemeName(k.scheme)},
                    {"public_key", Base64Encode(k.public_key)}});
  }
  return {{"logs", logs}};
}

std::vector<LogKey> LoadKeys(const std::string& path) {
  nlohmann::json j = ReadJsonFile(path);
  std::vector<LogKey> keys;
  for (const auto& l : j.at("logs")) {
    auto scheme = ParseSignatureScheme(l.at("scheme").get<std::string>());
    auto key = Base64Decode(l.at("public_key").get<std::string>());
    if (!scheme || !key) throw std::runtime_error(path + ": bad key entry");
    keys.push_back({l.at("name").get<std::string>(), *scheme, *key});
  }
  if (keys.empty()) throw std::runtime_error(path + ": no logs");
  return keys;
}

// ----- mklog ------------------------------------------------------------

struct MklogArgs {
  std::string name = "pilot";
  std::string scheme = "ed25519";
  std::string key_seed;
  uint64_t leaves = 10;
  std::vector<std::string> forks;
  uint64_t fork_leaves = 1;
  std::vector<std::string> assign;
  std::string default_branch;
  std::string out;
  std::string keys_out;
};

int RunMklog(const MklogArgs& a) {
  auto signer = MakeSigner(a.scheme, a.key_seed, a.name);
  MerkleLog log(a.name, LogPolicy{}, signer);
  for (uint64_t i = 0; i < a.leaves; ++i) log.Append(MerkleLog::kMainBranch, AsBytes("leaf/" + std::to_string(i)));
  for (const auto& b : a.forks) {
    log.Fork(b, MerkleLog::kMainBranch);
    for (uint64_t i = 0; i < a.fork_leaves; ++i) log.Append(b, AsBytes(b + "/" + std::to_string(i)));
  }
  if (!a.forks.empty()) {
    ForkPolicy policy;
    policy.mode = ForkMode::kForkByClientClass;
    policy.default_branch = a.default_branch.empty() ? a.forks.back() : a.default_branch;
    for (const auto& kv : a.assign) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--assign expects CLASS=BRANCH");
      policy.branch_assignment[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    log.SetForkPolicy(policy);
  } else if (!a.assign.empty()) {
    throw UsageError("--assign needs --fork");
  }
  auto out = OpenOut(a.out);
  WriteLogFile(log, out);
  std::vector<LogKey> keys = {{a.name, signer->scheme(), signer->public_key()}};
  if (!a.keys_out.empty()) Emit(a.keys_out, KeysJson(keys).dump(2) + "\n");
  std::cerr << "wrote " << a.out << " (" << log.Branches().size() << " branches)\n";
  return 0;
}

// ----- logserve -----------------------------------------------------------

struct LogserveArgs {
  std::string log_file;
  std::string scheme = "ed25519";
  std::string key_seed;
  std::string log_name;  // for the demo key when no seed is given
  std::string bind = "127.0.0.1";
  uint16_t port = 5353;
  std::vector<std::string> classes;
  std::optional<uint64_t> timestamp;
  uint64_t max_queries = 0;
  int idle_timeout_ms = 0;
  bool deterministic = false;
};

int RunLogserve(const LogserveArgs& a) {
  std::ifstream in(a.log_file);
  if (!in) throw std::runtime_error("cannot open " + a.log_file);
  // The header names the log; peek so the demo key can be derived.
  std::string header;
  std::getline(in, header);
  std::string name = a.log_name.empty() ? nlohmann::json::parse(header).at("name").get<std::string>() : a.log_name;
  in.clear();
  in.seekg(0);
  MerkleLog log = ReadLogFile(in, MakeSigner(a.scheme, a.key_seed, name));

  uint64_t ts = a.timestamp ? *a.timestamp : (a.deterministic ? 0 : NowMs());
  bool forked = log.Branches().size() > 1;
  for (const auto& b : log.Branches()) {
    if (forked && b == MerkleLog::kMainBranch) continue;
    log.IssueSth(b, ts);
  }

  LogServer server;
  server.AddLog(&log);
  for (const auto& kv : a.classes) {
    auto eq = kv.find('=');
    auto prefix = eq == std::string::npos ? std::nullopt : ParsePrefix(kv.substr(0, eq));
    if (!prefix) throw UsageError("--class expects PREFIX=LABEL, got " + kv);
    server.AddSourceClass(*prefix, kv.substr(eq + 1));
  }
  UdpEndpoint endpoint(&server, a.bind, a.port);
  std::cerr << "serving " << log.id().name << " on " << a.bind << ":" << endpoint.port() << "\n";
  endpoint.Serve(a.max_queries, a.idle_timeout_ms);
  const auto& c = server.counters();
  std::cout << nlohmann::json{{"queries", c.queries},
                              {"answered", c.answered},
                              {"name_errors", c.name_errors},
                              {"malformed", c.malformed}}
                   .dump()
            << "\n";
  return 0;
}

struct QueryArgs {
  std::string server = "127.0.0.1";
  uint16_t port = 5353;
  std::string log = "pilot";
  std::string source;
  int timeout_ms = 2000;
};

int RunQuery(const QueryArgs& a) {
  auto response = QueryUdp(a.server, a.port, BuildDnsQuery(SthQueryName(a.log), 0x4242), a.timeout_ms, a.source);
  if (!response) throw std::runtime_error("no answer from " + a.server);
  auto parsed = ParseDnsMessage(*response);
  if (!parsed.message) {
    if (response->size() >= 4 && (response->at(3) & 0x0f) == 3) {
      std::cout << "NXDOMAIN\n";
      return kDataError;
    }
    throw std::runtime_error(std::string("unparseable answer: ") + std::string(DnsRejectName(parsed.reject)));
  }
  auto sth = DecodeSthTxt(parsed.message->txt_payload);
  if (!sth) throw std::runtime_error("answer is not an STH");
  nlohmann::json j = SthToJson(*sth);
  j.erase("log_id");  // not carried over DNS
  j["log"] = a.log;
  std::cout << j.dump() << "\n";
  return 0;
}

// ----- aggregate ----------------------------------------------------------

struct AggregateArgs {
  std::string pcap;
  std::string out;
  std::string clones;
  std::string config;
  std::string stats;
  std::vector<std::string> known_logs;
  std::optional<uint64_t> sampling_n;
  std::optional<std::string> sampling_mode;
  std::optional<size_t> fragment_threshold;
  std::optional<size_t> response_threshold;
  std::optional<uint64_t> seed;
};

int RunAggregate(const AggregateArgs& a) {
  PipelineConfig config;
  if (!a.config.empty()) config = PipelineConfigFromJson(ReadJsonFile(a.config));
  if (!a.known_logs.empty()) config.known_logs = {a.known_logs.begin(), a.known_logs.end()};
  if (a.sampling_n) config.sampling_n = *a.sampling_n;
  if (a.sampling_mode) {
    if (*a.sampling_mode == "counter") {
      config.sampling_mode = SamplingMode::kCounter;
    } else if (*a.sampling_mode == "random") {
      config.sampling_mode = SamplingMode::kRandom;
    } else {
      throw UsageError("--sampling-mode is counter or random");
    }
  }
  if (a.fragment_threshold) config.fragment_threshold_bytes = *a.fragment_threshold;
  if (a.response_threshold) config.response_threshold_bytes = *a.response_threshold;
  if (a.seed) config.seed = *a.seed;
  config.Validate();
  PipelineStats stats = RunPcap(a.pcap, a.out, a.clones, config);
  Emit(a.stats, stats.ToJson().dump(2) + "\n");
  return 0;
}

// ----- challenge ----------------------------------------------------------

ChallengerConfig ChallengerConfigFromJson(const nlohmann::json& j) {
  ChallengerConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "reassembly_timeout_ms") {
      c.reassembly_timeout_ms = value.get<uint64_t>();
    } else if (key == "max_reassembly_buffers") {
      c.max_reassembly_buffers = value.get<size_t>();
    } else if (key == "audit_period_ms") {
      c.audit_period_ms = value.get<uint64_t>();
    } else if (key == "audit_delay_ms") {
      c.audit_delay_ms = value.get<uint64_t>();
    } else if (key == "sth_frequency") {
      c.sth_frequency = value.get<uint32_t>();
    } else if (key == "frequency_window_ms") {
      c.frequency_window_ms = value.get<uint64_t>();
    } else if (key == "max_labels") {
      c.limits.max_labels = value.get<size_t>();
    } else if (key == "response_threshold_bytes") {
      c.limits.response_threshold = value.get<size_t>();
    } else {
      throw ConfigError("unknown challenger config key " + key);
    }
  }
  if (c.max_reassembly_buffers == 0 || c.sth_frequency == 0 || c.limits.max_labels == 0) {
    throw ConfigError("challenger config values must be positive");
  }
  return c;
}

// Used when no off-path source is configured: every request fails, so an
// audit reports only what the store alone proves.
class OfflineChannel : public OffPathChannel {
 public:
  SignedTreeHead FetchSth(const std::string&) override { throw TransportError("offline"); }
  std::optional<std::vector<Digest>> GetConsistencyProof(const std::string&, uint64_t, uint64_t) override {
    throw TransportError("offline");
  }
};

struct ChallengeArgs {
  std::vector<std::string> clones;
  std::string keys;
  std::string journal;
  std::string report;
  std::string config;
  std::string offpath_log;
  std::string offpath_scheme = "ed25519";
  std::string offpath_key_seed;
  std::string identity = "anon-1";
  std::optional<uint64_t> now;
  bool deterministic = false;
};

int RunChallenge(const ChallengeArgs& a) {
  ChallengerConfig config;
  if (!a.config.empty()) config = ChallengerConfigFromJson(ReadJsonFile(a.config));
  std::vector<LogKey> keys = LoadKeys(a.keys);
  std::vector<std::vector<PcapRecord>> inputs;
  for (const auto& path : a.clones) inputs.push_back(ReadPcapFile(path));

  std::optional<MerkleLog> offpath;
  if (!a.offpath_log.empty()) {
    std::ifstream in(a.offpath_log);
    if (!in) throw std::runtime_error("cannot open " + a.offpath_log);
    std::string header;
    std::getline(in, header);
    std::string name = nlohmann::json::parse(header).at("name").get<std::string>();
    in.clear();
    in.seekg(0);
    offpath.emplace(ReadLogFile(in, MakeSigner(a.offpath_scheme, a.offpath_key_seed, name)));
  }

  Challenger challenger(config, keys);
  std::ofstream journal;
  if (!a.journal.empty()) {
    if (std::ifstream existing(a.journal); existing) {
      size_t replayed = challenger.LoadJournal(existing);
      std::cerr << "replayed " << replayed << " journal entries\n";
    }
    journal.open(a.journal, std::ios::app);
    if (!journal) throw std::runtime_error("cannot write " + a.journal);
    challenger.SetJournal(&journal);
  }

  uint64_t latest = 0;
  for (const auto& records : inputs) {
    for (const auto& r : records) {
      uint64_t t = r.timestamp_us / 1000;
      latest = std::max(latest, t);
      challenger.IngestClone(r.data, t);
    }
  }
  uint64_t now = a.now ? *a.now : latest;

  nlohmann::json audits = nlohmann::json::array();
  for (const auto& key : keys) {
    AuditResult result;
    if (offpath && offpath->id().name == key.name) {
      bool forked = offpath->Branches().size() > 1;
      for (const auto& b : offpath->Branches()) {
        if (!(forked && b == MerkleLog::kMainBranch)) offpath->IssueSth(b, now);
      }
      MerkleLogChannel channel(&*offpath, a.identity);
      try {
        challenger.FetchOffPath(channel, key.name, now);
      } catch (const TransportError& e) {
        std::cerr << "off-path fetch for " << key.name << " failed: " << e.what() << "\n";
      }
      result = challenger.Audit(channel, key.name, now);
    } else {
      OfflineChannel offline;
      result = challenger.Audit(offline, key.name, now);
    }
    audits.push_back({{"log", key.name},
                      {"complete", result.complete},
                      {"proof_requests", result.proof_requests},
                      {"new_findings", result.evidence.size()}});
  }

  nlohmann::json metadata = {{"counters", challenger.counters().ToJson()}, {"audits", audits}};
  auto evidence = challenger.AllEvidence();
  nlohmann::json report = BuildReport(evidence, keys, a.deterministic ? 0 : NowMs(), metadata);
  Emit(a.report, report.dump(2) + "\n");
  std::cerr << evidence.size() << " finding(s)\n";
  return 0;
}

int RunVerifyReport(const std::string& report_path, const std::string& keys_path) {
  nlohmann::json report = ReadJsonFile(report_path);
  std::map<std::string, LogKey> keys;
  for (const auto& k : LoadKeys(keys_path)) keys[k.name] = k;
  auto checks = ReverifyReport(report, keys);
  bool all = true;
  for (size_t i = 0; i < checks.size(); ++i) {
    std::cout << "finding " << i << ": " << (checks[i].accepted ? "accepted" : "REJECTED");
    if (!checks[i].reason.empty()) std::cout << " (" << checks[i].reason << ")";
    std::cout << "\n";
    all &= checks[i].accepted;
  }
  std::cout << (all ? "report accepted" : "report rejected") << "\n";
  return all ? 0 : kDataError;
}

// ----- simulate -----------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::optional<uint64_t> seed;
  std::string report;
  uint64_t trials = 0;
};

int RunSimulate(const SimulateArgs& a) {
  Scenario s = ScenarioFromJson(ReadJsonFile(a.scenario));
  if (a.seed) s.seed = *a.seed;
  if (a.trials > 0) {
    auto est = DetectionProbability(s, a.trials, s.seed);
    nlohmann::json j = {{"scenario", s.name},
                        {"trials", est.trials},
                        {"detections", est.detections},
                        {"probability", est.probability},
                        {"stderr", est.stderr_}};
    if (!a.report.empty()) Emit(a.report, j.dump(2) + "\n");
    std::printf("P(detected) = %.4f +/- %.4f over %llu trials\n", est.probability, est.stderr_,
                static_cast<unsigned long long>(est.trials));
    return 0;
  }
  SimReport r = RunScenario(s);
  if (!a.report.empty()) Emit(a.report, r.ToJson().dump(2) + "\n");
  std::cout << (r.detected ? "DETECTED" : "NOT-DETECTED") << " scenario=" << s.name
            << " evidence=" << r.EvidenceCount();
  if (r.detection_round) std::cout << " round=" << *r.detection_round << " audit=" << *r.detection_audit;
  std::cout << "\n";
  return 0;
}

// ----- coverage -----------------------------------------------------------

struct CoverageArgs {
  std::string traceroutes;
  std::string rib;
  std::string ixp;
  std::string ranking;
  std::string probes;
  std::vector<std::string> targets;
  size_t k_max = 32;
  bool raw_pop = false;
  std::string out;
};

int RunCoverage(const CoverageArgs& a) {
  LoadStats trace_stats, rib_stats, ixp_stats;
  auto records = LoadTraceroutesFile(a.traceroutes, &trace_stats);
  RibTable rib = LoadRibFile(a.rib, &rib_stats);
  IxpTable ixp = a.ixp.empty() ? IxpTable{} : LoadIxpFile(a.ixp, &ixp_stats);
  if (!a.probes.empty()) {
    std::ifstream in(a.probes);
    if (!in) throw std::runtime_error("cannot open " + a.probes);
    ApplyProbeAsns(in, &records);
  }
  std::vector<VantagePoint> ranking;
  if (!a.ranking.empty()) ranking = LoadRankingFile(a.ranking);
  if (trace_stats.skipped) std::cerr << "skipped " << trace_stats.skipped << " traceroute rows\n";
  if (rib_stats.skipped) std::cerr << "skipped " << rib_stats.skipped << " RIB rows\n";

  std::vector<std::string> targets = a.targets;
  if (targets.empty()) {
    std::set<std::string> seen;
    for (const auto& r : records) seen.insert(r.target);
    targets.assign(seen.begin(), seen.end());
  }
  if (!a.out.empty()) std::filesystem::create_directories(a.out);

  nlohmann::json summary = nlohmann::json::array();
  for (const auto& t : targets) {
    auto analysis = AnalyzeTarget(records, rib, ixp, t, a.ranking.empty() ? nullptr : &ranking, a.k_max,
                                  a.raw_pop ? PopWeighting::kRaw : PopWeighting::kWeighted);
    for (const auto& w : analysis.warnings) std::cerr << "warning: " << t << ": " << w << "\n";
    summary.push_back(analysis.Summary());
    if (a.out.empty()) continue;
    std::string base = a.out + "/" + t;
    auto as = OpenOut(base + "_as_length.csv");
    WriteHistogramCsv(as, t, VantagePoint::Kind::kAs, analysis.as_lengths);
    auto ix = OpenOut(base + "_ixp_length.csv");
    WriteHistogramCsv(ix, t, VantagePoint::Kind::kIxp, analysis.ixp_lengths);
    auto st = OpenOut(base + "_stability.csv");
    WriteStabilityCsv(st, t, analysis.stability);
    std::ostringstream curves;
    for (size_t i = 0; i < analysis.curves.size(); ++i) {
      std::ostringstream one;
      WriteCurveCsv(one, t, analysis.curves[i]);
      std::string text = one.str();
      curves << (i == 0 ? text : text.substr(text.find('\n') + 1));
    }
    OpenOut(base + "_curves.csv") << curves.str();
  }
  std::string text = summary.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    OpenOut(a.out + "/summary.json") << text;
  }
  return 0;
}

// ----- fixtures -----------------------------------------------------------

struct FixturesArgs {
  std::string out_dir;
  uint64_t seed = 1;
  size_t sth = 100;
  size_t background = 900;
  bool fork = false;
};

// A capture of STH responses for "pilot" mixed with traffic the pipeline
// must pass untouched. With --fork every other response comes from a
// second branch of the same log.
int RunFixtures(const FixturesArgs& a) {
  std::filesystem::create_directories(a.out_dir);
  std::mt19937_64 rng(a.seed);
  auto signer = FixtureSigner();
  MerkleLog log("pilot", LogPolicy{}, signer);
  for (int i = 0; i < 10; ++i) log.Append(MerkleLog::kMainBranch, AsBytes("leaf/" + std::to_string(i)));
  std::vector<std::string> branches = {std::string(MerkleLog::kMainBranch)};
  if (a.fork) {
    log.Fork("a", MerkleLog::kMainBranch);
    log.Fork("b", MerkleLog::kMainBranch);
    branches = {"a", "b"};
  }

  std::vector<PcapRecord> records;
  uint64_t t_us = 1'700'000'000'000'000;
  size_t sth_left = a.sth, bg_left = a.background;
  uint64_t issued = 0;
  while (sth_left + bg_left > 0) {
    t_us += 1000 + rng() % 1000;
    bool sth = bg_left == 0 || (sth_left > 0 && rng() % (sth_left + bg_left) < sth_left);
    RawPacket frame;
    if (sth) {
      --sth_left;
      const std::string& b = branches[issued % branches.size()];
      log.Append(b, AsBytes(b + "/" + std::to_string(issued)));
      // One STH per hour keeps the issuance budget; time here is logical.
      SignedTreeHead head = log.IssueSth(b, 1'700'000'000'000 + issued * 3'600'000);
      ++issued;
      frame = BuildSthPacket("pilot", head, static_cast<uint16_t>(rng()), rng() % 4 == 0, 0,
                             static_cast<uint16_t>(rng()));
    } else {
      --bg_left;
      PacketBlueprint bp;
      switch (rng() % 5) {
        case 0:  // client query
          bp.src_port = 40000;
          bp.dst_port = 53;
          bp.payload = BuildDnsQuery(SthQueryName("pilot"), static_cast<uint16_t>(rng()));
          frame = SerializePacket(bp);
          break;
        case 1: {  // a log this aggregator does not know
          SignedTreeHead other = FixtureSth("zzzzz", 1 + rng() % 1000);
          frame = BuildSthPacket("zzzzz", other, static_cast<uint16_t>(rng()));
          break;
        }
        case 2:  // other UDP
          bp.src_port = 443;
          bp.payload.resize(rng() % 1200);
          for (auto& x : bp.payload) x = static_cast<uint8_t>(rng());
          frame = SerializePacket(bp);
          break;
        case 3:  // TCP from port 53
          bp.transport = Transport::kTcp;
          bp.payload.resize(rng() % 300);
          frame = SerializePacket(bp);
          break;
        default: {  // ARP
          frame.assign(60, 0);
          frame[12] = 0x08;
          frame[13] = 0x06;
          break;
        }
      }
    }
    records.push_back({t_us, std::move(frame), 0});
  }
  for (auto& r : records) r.original_length = static_cast<uint32_t>(r.data.size());
  WritePcapFile(a.out_dir + "/mixed.pcap", records);
  std::vector<LogKey> keys = {{"pilot", signer->scheme(), signer->public_key()}};
  OpenOut(a.out_dir + "/keys.json") << KeysJson(keys).dump(2) << "\n";
  nlohmann::json expected = {{"packets", records.size()},
                             {"sth_responses", a.sth},
                             {"clones_at_sampling_n_1", a.sth},
                             {"forked", a.fork}};
  OpenOut(a.out_dir + "/expected.json") << expected.dump(2) << "\n";
  std::cerr << "wrote " << records.size() << " packets to " << a.out_dir << "/mixed.pcap\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctga: aggregation of CT-over-DNS tree heads for off-path challengers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ctga 0.1.0");

  MklogArgs mk;
  auto* mklog = app.add_subcommand("mklog", "Write a log file, optionally with forked branches");
  mklog->add_option("--name", mk.name, "Log name")->capture_default_str();
  mklog->add_option("--scheme", mk.scheme, "ed25519 or test-mac")->capture_default_str();
  mklog->add_option("--key-seed", mk.key_seed, "32-byte signing seed, hex (default: derived from the name)");
  mklog->add_option("--leaves", mk.leaves, "Leaves in the shared prefix")->capture_default_str();
  mklog->add_option("--fork", mk.forks, "Branch to fork from main (repeatable)");
  mklog->add_option("--fork-leaves", mk.fork_leaves, "Leaves appended to each branch")->capture_default_str();
  mklog->add_option("--assign", mk.assign, "CLASS=BRANCH (repeatable)");
  mklog->add_option("--default-branch", mk.default_branch, "Branch for unassigned classes");
  mklog->add_option("--out", mk.out, "Log file to write")->required();
  mklog->add_option("--keys-out", mk.keys_out, "Write the public key set as JSON");

  LogserveArgs ls;
  auto* logserve = app.add_subcommand("logserve", "Answer sth.<log>.ct.googleapis.com TXT queries over UDP");
  logserve->add_option("--log", ls.log_file, "Log file")->required()->check(CLI::ExistingFile);
  logserve->add_option("--scheme", ls.scheme)->capture_default_str();
  logserve->add_option("--key-seed", ls.key_seed);
  logserve->add_option("--bind", ls.bind)->capture_default_str();
  logserve->add_option("--port", ls.port)->capture_default_str();
  logserve->add_option("--class", ls.classes, "PREFIX=LABEL source classes for fork policies");
  logserve->add_option("--timestamp", ls.timestamp, "STH timestamp in ms (default: now)");
  logserve->add_option("--max-queries", ls.max_queries, "Stop after this many datagrams");
  logserve->add_option("--idle-timeout-ms", ls.idle_timeout_ms, "Stop after this long without a query");
  logserve->add_flag("--deterministic", ls.deterministic, "Use timestamp 0 unless --timestamp is given");

  QueryArgs qa;
  auto* query = app.add_subcommand("query", "Fetch and decode one STH from a logserve endpoint");
  query->add_option("--server", qa.server)->capture_default_str();
  query->add_option("--port", qa.port)->capture_default_str();
  query->add_option("--log", qa.log)->capture_default_str();
  query->add_option("--source", qa.source, "Local address to send from");
  query->add_option("--timeout-ms", qa.timeout_ms)->capture_default_str();

  AggregateArgs ag;
  auto* aggregate = app.add_subcommand("aggregate", "Run a capture through the aggregation pipeline");
  aggregate->add_option("--pcap", ag.pcap, "Input capture")->required()->check(CLI::ExistingFile);
  aggregate->add_option("--out", ag.out, "Forwarded capture")->required();
  aggregate->add_option("--clones", ag.clones, "Cloned packets capture")->required();
  aggregate->add_option("--config", ag.config, "Pipeline config JSON")->check(CLI::ExistingFile);
  aggregate->add_option("--stats", ag.stats, "Where to write stats JSON (default: stdout)");
  aggregate->add_option("--known-log", ag.known_logs, "Known log name (repeatable)");
  aggregate->add_option("--sampling-n", ag.sampling_n, "Clone every n-th match");
  aggregate->add_option("--sampling-mode", ag.sampling_mode, "counter or random");
  aggregate->add_option("--fragment-threshold", ag.fragment_threshold, "Bytes");
  aggregate->add_option("--response-threshold", ag.response_threshold, "Bytes");
  aggregate->add_option("--seed", ag.seed, "Seed for random sampling");

  ChallengeArgs ch;
  auto* challenge = app.add_subcommand("challenge", "Ingest cloned packets, audit, and write a report");
  challenge->add_option("--clones", ch.clones, "Cloned packets capture (repeatable)")->required()->check(CLI::ExistingFile);
  challenge->add_option("--keys", ch.keys, "Trusted log keys JSON")->required()->check(CLI::ExistingFile);
  challenge->add_option("--journal", ch.journal, "JSON-lines store journal, replayed then appended");
  challenge->add_option("--report", ch.report, "Report path (default: stdout)");
  challenge->add_option("--config", ch.config, "Challenger config JSON")->check(CLI::ExistingFile);
  challenge->add_option("--offpath-log", ch.offpath_log, "Log file queried as the off-path source");
  challenge->add_option("--offpath-scheme", ch.offpath_scheme)->capture_default_str();
  challenge->add_option("--offpath-key-seed", ch.offpath_key_seed);
  challenge->add_option("--identity", ch.identity, "Off-path identity presented to the log")->capture_default_str();
  challenge->add_option("--now", ch.now, "Audit time in ms (default: newest clone)");
  challenge->add_flag("--deterministic", ch.deterministic, "Report generated_at = 0");

  std::string verify_report, verify_keys;
  auto* verify = app.add_subcommand("verify-report", "Re-check every finding in a report");
  verify->add_option("--report", verify_report)->required()->check(CLI::ExistingFile);
  verify->add_option("--keys", verify_keys)->required()->check(CLI::ExistingFile);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a split-view scenario");
  simulate->add_option("--scenario", sim.scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim.seed, "Override the scenario seed");
  simulate->add_option("--report", sim.report, "Write the full report JSON here ('-' for stdout)");
  simulate->add_option("--trials", sim.trials, "Estimate detection probability over this many seeds");
  bool sim_deterministic = false;
  simulate->add_flag("--deterministic", sim_deterministic, "Accepted for symmetry; simulations are always deterministic");

  CoverageArgs cov;
  auto* coverage = app.add_subcommand("coverage", "Path length, stability and coverage analysis");
  coverage->add_option("--traceroutes", cov.traceroutes, "RIPE Atlas JSON or JSON-lines")->required()->check(CLI::ExistingFile);
  coverage->add_option("--rib", cov.rib, "prefix,asn CSV")->required()->check(CLI::ExistingFile);
  coverage->add_option("--ixp", cov.ixp, "prefix,ixp_id,name CSV")->check(CLI::ExistingFile);
  coverage->add_option("--ranking", cov.ranking, "rank,asn CSV")->check(CLI::ExistingFile);
  coverage->add_option("--probes", cov.probes, "probe_id,asn CSV")->check(CLI::ExistingFile);
  coverage->add_option("--target", cov.targets, "Target label (repeatable; default: all)");
  coverage->add_option("--k-max", cov.k_max, "Largest opt-in set size on curves")->capture_default_str();
  coverage->add_flag("--raw-pop", cov.raw_pop, "Rank Pop by probe count instead of weight");
  coverage->add_option("--out", cov.out, "Output directory (default: summary to stdout)");
  bool cov_deterministic = false;
  coverage->add_flag("--deterministic", cov_deterministic, "Accepted for symmetry; output has no timestamps");

  FixturesArgs fx;
  auto* fixtures = app.add_subcommand("fixtures", "Write the golden mixed capture and its keys");
  fixtures->add_option("--out-dir", fx.out_dir)->required();
  fixtures->add_option("--seed", fx.seed)->capture_default_str();
  fixtures->add_option("--sth", fx.sth, "STH responses")->capture_default_str();
  fixtures->add_option("--background", fx.background, "Other packets")->capture_default_str();
  fixtures->add_flag("--fork", fx.fork, "Alternate responses between two branches");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*mklog) return RunMklog(mk);
    if (*logserve) return RunLogserve(ls);
    if (*query) return RunQuery(qa);
    if (*aggregate) return RunAggregate(ag);
    if (*challenge) return RunChallenge(ch);
    if (*verify) return RunVerifyReport(verify_report, verify_keys);
    if (*simulate) return RunSimulate(sim);
    if (*coverage) return RunCoverage(cov);
    if (*fixtures) return RunFixtures(fx);
  } catch (const UsageError& e) {
    std::cerr << "ctga: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "ctga: error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}
