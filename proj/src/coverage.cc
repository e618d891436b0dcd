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

#include "ctga/coverage.h"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ctga {

namespace {

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> SplitCsv(std::string_view line, size_t max_fields) {
  std::vector<std::string_view> out;
  while (out.size() + 1 < max_fields) {
    size_t comma = line.find(',');
    if (comma == std::string_view::npos) break;
    out.push_back(Trim(line.substr(0, comma)));
    line.remove_prefix(comma + 1);
  }
  out.push_back(Trim(line));
  return out;
}

template <typename T>
std::optional<T> ParseUnsigned(std::string_view s) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

// Calls row(fields) for each non-blank, non-comment line; rows for which it
// returns false are counted as skipped. A first row that fails is treated
// as a header.
template <typename F>
void ForEachCsvRow(std::istream& in, size_t fields, LoadStats* stats, F&& row) {
  LoadStats local;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::string_view v = Trim(line);
    if (v.empty() || v.front() == '#') continue;
    bool ok = row(SplitCsv(v, fields));
    if (ok) {
      ++local.rows;
    } else if (!first) {
      ++local.skipped;
    }
    first = false;
  }
  if (stats) *stats = local;
}

std::ifstream OpenOrThrow(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CoverageError("cannot open " + path);
  return in;
}

const std::map<std::string, std::string>& KnownTargets() {
  static const std::map<std::string, std::string> targets = {
      {"216.239.34.64", "google"},
      {"194.68.13.48", "nordunet"},
  };
  return targets;
}

std::optional<uint32_t> OptionalAddress(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  auto addr = ParseIpv4(j.at(key).get<std::string>());
  if (!addr) throw CoverageError(std::string("bad address in ") + key);
  return addr;
}

// One result object of a RIPE Atlas traceroute measurement.
TracerouteRecord FromAtlas(const nlohmann::json& j, uint64_t* timestamp) {
  TracerouteRecord r;
  r.probe_id = j.at("prb_id").get<uint64_t>();
  std::string from = j.value("from", "");
  if (!from.empty()) r.probe_address = ParseIpv4(from);
  std::string dst = j.value("dst_addr", "");
  r.target_address = ParseIpv4(dst);
  auto known = KnownTargets().find(dst);
  r.target = known != KnownTargets().end() ? known->second : j.value("dst_name", dst);
  *timestamp = j.at("timestamp").get<uint64_t>();
  for (const auto& hop : j.at("result")) {
    std::optional<uint32_t> addr;
    for (const auto& reply : hop.value("result", nlohmann::json::array())) {
      if (reply.contains("from")) {
        addr = ParseIpv4(reply.at("from").get<std::string>());
        if (addr) break;
      }
    }
    r.hops.push_back(addr);
  }
  return r;
}

TracerouteRecord FromSimple(const nlohmann::json& j) {
  TracerouteRecord r;
  r.probe_id = j.at("probe_id").get<uint64_t>();
  if (j.contains("probe_asn") && !j.at("probe_asn").is_null()) r.probe_asn = j.at("probe_asn").get<uint32_t>();
  r.probe_address = OptionalAddress(j, "probe_address");
  r.target = j.at("target").get<std::string>();
  if (j.contains("target_asn") && !j.at("target_asn").is_null()) r.target_asn = j.at("target_asn").get<uint32_t>();
  r.target_address = OptionalAddress(j, "target_address");
  r.day = j.at("day").get<uint32_t>();
  for (const auto& hop : j.at("hops")) {
    if (hop.is_null()) {
      r.hops.push_back(std::nullopt);
      continue;
    }
    auto addr = ParseIpv4(hop.get<std::string>());
    if (!addr) throw CoverageError("bad hop address");
    r.hops.push_back(addr);
  }
  return r;
}

void WriteFraction(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  out << buf;
}

}  // namespace

std::optional<uint32_t> ParseIpv4(std::string_view text) {
  uint32_t addr = 0;
  for (int i = 0; i < 4; ++i) {
    size_t dot = text.find('.');
    std::string_view part = i < 3 ? text.substr(0, dot) : text;
    if (i < 3 && dot == std::string_view::npos) return std::nullopt;
    if (part.size() > 3) return std::nullopt;
    auto octet = ParseUnsigned<uint32_t>(part);
    if (!octet || *octet > 255) return std::nullopt;
    addr = (addr << 8) | *octet;
    if (i < 3) text.remove_prefix(dot + 1);
  }
  return addr;
}

std::string FormatIpv4(uint32_t addr) {
  return std::to_string(addr >> 24) + "." + std::to_string((addr >> 16) & 0xff) + "." +
         std::to_string((addr >> 8) & 0xff) + "." + std::to_string(addr & 0xff);
}

bool Ipv4Prefix::Contains(uint32_t addr) const {
  uint32_t mask = length ? ~uint32_t{0} << (32 - length) : 0;
  return (addr & mask) == address;
}

std::string Ipv4Prefix::ToString() const {
  return FormatIpv4(address) + "/" + std::to_string(length);
}

std::optional<Ipv4Prefix> ParsePrefix(std::string_view text) {
  size_t slash = text.find('/');
  if (slash == std::string_view::npos) return std::nullopt;
  auto addr = ParseIpv4(text.substr(0, slash));
  auto len = ParseUnsigned<uint32_t>(text.substr(slash + 1));
  if (!addr || !len || *len > 32) return std::nullopt;
  Ipv4Prefix p{*addr, static_cast<uint8_t>(*len)};
  if (!p.Contains(*addr)) return std::nullopt;  // host bits set
  return p;
}

void RibTable::Add(const Ipv4Prefix& prefix, uint32_t asn) { trie_.Insert(prefix, asn); }

std::optional<uint32_t> RibTable::Lookup(uint32_t addr) const {
  auto m = trie_.Lookup(addr);
  if (!m) return std::nullopt;
  return *m->value;
}

std::map<uint32_t, uint64_t> RibTable::AddressSpace() const {
  std::map<uint32_t, uint64_t> space;
  trie_.ForEachOwnedSpan([&](uint32_t asn, uint64_t n) { space[asn] += n; });
  return space;
}

RibTable LoadRib(std::istream& in, LoadStats* stats) {
  RibTable rib;
  ForEachCsvRow(in, 2, stats, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 2) return false;
    auto prefix = ParsePrefix(f[0]);
    auto asn = ParseUnsigned<uint32_t>(f[1]);
    if (!prefix || !asn) return false;
    rib.Add(*prefix, *asn);
    return true;
  });
  return rib;
}

RibTable LoadRibFile(const std::string& path, LoadStats* stats) {
  auto in = OpenOrThrow(path);
  return LoadRib(in, stats);
}

void IxpTable::Add(const Ipv4Prefix& prefix, IxpInfo info) { trie_.Insert(prefix, std::move(info)); }

std::optional<IxpInfo> IxpTable::Lookup(uint32_t addr) const {
  auto m = trie_.Lookup(addr);
  if (!m) return std::nullopt;
  return *m->value;
}

IxpTable LoadIxp(std::istream& in, LoadStats* stats) {
  IxpTable ixp;
  ForEachCsvRow(in, 3, stats, [&](const std::vector<std::string_view>& f) {
    if (f.size() < 2) return false;
    auto prefix = ParsePrefix(f[0]);
    auto id = ParseUnsigned<uint32_t>(f[1]);
    if (!prefix || !id) return false;
    ixp.Add(*prefix, {*id, f.size() > 2 ? std::string(f[2]) : std::string()});
    return true;
  });
  return ixp;
}

IxpTable LoadIxpFile(const std::string& path, LoadStats* stats) {
  auto in = OpenOrThrow(path);
  return LoadIxp(in, stats);
}

std::string VantagePoint::ToString() const {
  return (kind == Kind::kAs ? "AS" : "IXP") + std::to_string(id);
}

std::optional<VantagePoint> ParseVantagePoint(std::string_view text) {
  text = Trim(text);
  if (text.starts_with("IXP") || text.starts_with("ixp")) {
    auto id = ParseUnsigned<uint32_t>(text.substr(3));
    if (!id) return std::nullopt;
    return VantagePoint::Ixp(*id);
  }
  if (text.starts_with("AS") || text.starts_with("as")) text.remove_prefix(2);
  auto asn = ParseUnsigned<uint32_t>(text);
  if (!asn) return std::nullopt;
  return VantagePoint::As(*asn);
}

bool TracerouteRecord::failed() const {
  return std::none_of(hops.begin(), hops.end(), [](const auto& h) { return h.has_value(); });
}

std::vector<TracerouteRecord> LoadTraceroutes(std::istream& in, LoadStats* stats) {
  LoadStats local;
  std::vector<TracerouteRecord> records;
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::string_view body = Trim(text);

  if (body.starts_with('[')) {
    nlohmann::json all = nlohmann::json::parse(body, nullptr, false);
    if (all.is_discarded() || !all.is_array()) throw CoverageError("traceroute file is not valid JSON");
    // Atlas results carry wall-clock timestamps; day 0 is each target's first.
    std::vector<std::pair<TracerouteRecord, uint64_t>> atlas;
    for (const auto& row : all) {
      try {
        if (row.contains("result")) {
          uint64_t ts = 0;
          auto r = FromAtlas(row, &ts);
          atlas.emplace_back(std::move(r), ts);
        } else {
          records.push_back(FromSimple(row));
        }
      } catch (const std::exception&) {
        ++local.skipped;
      }
    }
    std::map<std::string, uint64_t> first;
    for (const auto& [r, ts] : atlas) {
      auto [it, inserted] = first.emplace(r.target, ts);
      if (!inserted) it->second = std::min(it->second, ts);
    }
    for (auto& [r, ts] : atlas) {
      r.day = static_cast<uint32_t>((ts - first[r.target]) / 86400);
      records.push_back(std::move(r));
    }
  } else {
    std::istringstream lines{std::string(body)};
    std::string line;
    while (std::getline(lines, line)) {
      if (Trim(line).empty()) continue;
      try {
        records.push_back(FromSimple(nlohmann::json::parse(line)));
      } catch (const std::exception&) {
        ++local.skipped;
      }
    }
  }

  std::erase_if(records, [&](const TracerouteRecord& r) {
    bool outside = r.day >= kMeasurementDays;
    local.skipped += outside;
    return outside;
  });
  local.rows = records.size();
  if (stats) *stats = local;
  if (records.empty()) throw CoverageError("no usable traceroute records");
  return records;
}

std::vector<TracerouteRecord> LoadTraceroutesFile(const std::string& path, LoadStats* stats) {
  auto in = OpenOrThrow(path);
  return LoadTraceroutes(in, stats);
}

size_t ApplyProbeAsns(std::istream& in, std::vector<TracerouteRecord>* records) {
  std::map<uint64_t, uint32_t> asns;
  ForEachCsvRow(in, 2, nullptr, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 2) return false;
    auto id = ParseUnsigned<uint64_t>(f[0]);
    auto asn = ParseUnsigned<uint32_t>(f[1]);
    if (!id || !asn) return false;
    asns[*id] = *asn;
    return true;
  });
  size_t filled = 0;
  for (auto& r : *records) {
    auto it = asns.find(r.probe_id);
    if (!r.probe_asn && it != asns.end()) {
      r.probe_asn = it->second;
      ++filled;
    }
  }
  return filled;
}

size_t AnnotatedPath::Length(VantagePoint::Kind kind) const {
  return std::count_if(path.begin(), path.end(), [kind](const auto& v) { return v.kind == kind; });
}

AnnotatedPath Annotate(const TracerouteRecord& record, const RibTable& rib, const IxpTable& ixp) {
  AnnotatedPath out;
  out.probe_id = record.probe_id;
  out.probe_asn = record.probe_asn;
  if (!out.probe_asn && record.probe_address) out.probe_asn = rib.Lookup(*record.probe_address);

  std::vector<VantagePoint> seq;
  std::optional<uint32_t> last_as;
  for (const auto& hop : record.hops) {
    if (!hop) {
      ++out.missing_hops;
      continue;
    }
    VantagePoint vp;
    if (auto x = ixp.Lookup(*hop)) {
      vp = VantagePoint::Ixp(x->id);
    } else if (auto asn = rib.Lookup(*hop)) {
      vp = VantagePoint::As(*asn);
      last_as = *asn;
    } else {
      ++out.unmapped_hops;
      continue;
    }
    if (seq.empty() || seq.back() != vp) seq.push_back(vp);
  }

  std::optional<uint32_t> target_asn = record.target_asn;
  if (!target_asn && record.target_address) target_asn = rib.Lookup(*record.target_address);
  if (!target_asn) target_asn = last_as;

  auto begin = seq.begin();
  auto end = seq.end();
  if (out.probe_asn) {
    while (begin != end && *begin == VantagePoint::As(*out.probe_asn)) ++begin;
  }
  if (target_asn) {
    while (end != begin && *(end - 1) == VantagePoint::As(*target_asn)) --end;
  }
  out.path.assign(begin, end);
  return out;
}

PathSet BuildPathSet(const std::vector<TracerouteRecord>& records, const RibTable& rib,
                     const IxpTable& ixp, const PathSetOptions& options) {
  std::map<uint64_t, const TracerouteRecord*> chosen;
  for (const auto& r : records) {
    if (r.target != options.target || r.failed()) continue;
    if (options.day && r.day != *options.day) continue;
    auto [it, inserted] = chosen.emplace(r.probe_id, &r);
    if (!inserted && r.day < it->second->day) it->second = &r;
  }
  auto space = rib.AddressSpace();
  PathSet set;
  for (const auto& [id, r] : chosen) {
    AnnotatedPath a = Annotate(*r, rib, ixp);
    uint64_t weight = 0;
    if (a.probe_asn) {
      auto it = space.find(*a.probe_asn);
      if (it != space.end()) weight = it->second;
    }
    set.push_back({id, weight, std::move(a.path)});
  }
  return set;
}

std::map<size_t, double> PathLengthDistribution(const PathSet& set, VantagePoint::Kind kind) {
  std::map<size_t, uint64_t> mass;
  uint64_t total = 0;
  for (const auto& p : set) {
    size_t len = std::count_if(p.path.begin(), p.path.end(), [kind](const auto& v) { return v.kind == kind; });
    mass[len] += p.weight;
    total += p.weight;
  }
  if (set.empty() || total == 0) throw CoverageError("path length distribution of an empty set");
  std::map<size_t, double> hist;
  for (const auto& [len, w] : mass) {
    if (w) hist[len] = static_cast<double>(w) / static_cast<double>(total);
  }
  return hist;
}

std::optional<double> PathStability(const std::map<uint32_t, std::set<VantagePoint>>& by_day) {
  size_t pairs = 0, equal = 0;
  for (const auto& [day, vps] : by_day) {
    auto next = by_day.find(day + 1);
    if (next == by_day.end()) continue;
    ++pairs;
    equal += vps == next->second;
  }
  if (pairs == 0) return std::nullopt;
  return static_cast<double>(equal) / static_cast<double>(pairs);
}

std::vector<ProbeStability> StabilityByProbe(const std::vector<TracerouteRecord>& records,
                                             const RibTable& rib, const IxpTable& ixp,
                                             const std::string& target) {
  std::map<uint64_t, std::map<uint32_t, std::set<VantagePoint>>> per_probe;
  for (const auto& r : records) {
    if (r.target != target || r.failed()) continue;
    auto a = Annotate(r, rib, ixp);
    per_probe[r.probe_id][r.day] = std::set<VantagePoint>(a.path.begin(), a.path.end());
  }
  std::vector<ProbeStability> out;
  for (const auto& [id, days] : per_probe) {
    if (auto s = PathStability(days)) out.push_back({id, days.size(), *s});
  }
  return out;
}

double Coverage(const PathSet& set, const std::set<VantagePoint>& aggregators) {
  uint64_t total = 0, covered = 0;
  for (const auto& p : set) {
    total += p.weight;
    bool hit = std::any_of(p.path.begin(), p.path.end(),
                           [&](const auto& v) { return aggregators.contains(v); });
    if (hit) covered += p.weight;
  }
  if (total == 0) return 0;
  return static_cast<double>(covered) / static_cast<double>(total);
}

std::vector<VantagePoint> RankPop(const PathSet& set, std::optional<VantagePoint::Kind> kind,
                                  PopWeighting weighting) {
  std::map<VantagePoint, uint64_t> score;
  for (const auto& p : set) {
    std::set<VantagePoint> distinct(p.path.begin(), p.path.end());
    for (const auto& v : distinct) {
      if (kind && v.kind != *kind) continue;
      score[v] += weighting == PopWeighting::kWeighted ? p.weight : 1;
    }
  }
  std::vector<VantagePoint> ranked;
  for (const auto& [v, s] : score) ranked.push_back(v);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](const auto& a, const auto& b) { return score[a] > score[b]; });
  return ranked;
}

std::vector<VantagePoint> LoadRanking(std::istream& in, LoadStats* stats) {
  std::vector<std::pair<uint64_t, VantagePoint>> rows;
  uint64_t line_rank = 0;
  ForEachCsvRow(in, 2, stats, [&](const std::vector<std::string_view>& f) {
    ++line_rank;
    if (f.size() == 1) {
      auto v = ParseVantagePoint(f[0]);
      if (v) rows.emplace_back(line_rank, *v);
      return v.has_value();
    }
    auto rank = ParseUnsigned<uint64_t>(f[0]);
    auto v = ParseVantagePoint(f[1]);
    if (!rank || !v) return false;
    rows.emplace_back(*rank, *v);
    return true;
  });
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<VantagePoint> ranking;
  std::set<VantagePoint> seen;
  for (const auto& [rank, v] : rows) {
    if (seen.insert(v).second) ranking.push_back(v);
  }
  return ranking;
}

std::vector<VantagePoint> LoadRankingFile(const std::string& path, LoadStats* stats) {
  auto in = OpenOrThrow(path);
  return LoadRanking(in, stats);
}

CoverageCurve ComputeCoverageCurve(const PathSet& set, std::string ranking_name,
                                   const std::vector<VantagePoint>& ranking, size_t k_max) {
  CoverageCurve curve;
  curve.ranking = std::move(ranking_name);
  curve.truncated = k_max > ranking.size();
  size_t k_end = std::min(k_max, ranking.size());
  std::set<VantagePoint> chosen;
  curve.points.push_back({0, 0.0, std::nullopt});
  for (size_t k = 1; k <= k_end; ++k) {
    chosen.insert(ranking[k - 1]);
    curve.points.push_back({k, Coverage(set, chosen), ranking[k - 1]});
  }
  return curve;
}

void WriteHistogramCsv(std::ostream& out, const std::string& target, VantagePoint::Kind kind,
                       const std::map<size_t, double>& histogram) {
  out << "target,kind,length,fraction\n";
  for (const auto& [len, frac] : histogram) {
    out << target << ',' << (kind == VantagePoint::Kind::kAs ? "as" : "ixp") << ',' << len << ',';
    WriteFraction(out, frac);
    out << '\n';
  }
}

void WriteCurveCsv(std::ostream& out, const std::string& target, const CoverageCurve& curve) {
  out << "target,ranking,k,vantage_point,coverage\n";
  for (const auto& p : curve.points) {
    out << target << ',' << curve.ranking << ',' << p.k << ','
        << (p.added ? p.added->ToString() : "") << ',';
    WriteFraction(out, p.coverage);
    out << '\n';
  }
}

void WriteStabilityCsv(std::ostream& out, const std::string& target,
                       const std::vector<ProbeStability>& rows) {
  out << "target,probe_id,days,stability\n";
  for (const auto& r : rows) {
    out << target << ',' << r.probe_id << ',' << r.days << ',';
    WriteFraction(out, r.stability);
    out << '\n';
  }
}

nlohmann::json CoverageAnalysis::Summary() const {
  auto hist = [](const std::map<size_t, double>& h) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [len, frac] : h) j[std::to_string(len)] = frac;
    return j;
  };
  double mean = 0;
  for (const auto& s : stability) mean += s.stability;
  if (!stability.empty()) mean /= static_cast<double>(stability.size());
  nlohmann::json curves_json = nlohmann::json::object();
  for (const auto& c : curves) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : c.points) points.push_back(p.coverage);
    curves_json[c.ranking] = {{"coverage", points}, {"truncated", c.truncated}};
  }
  return {{"target", target},
          {"probes", probes},
          {"failed_records", failed_records},
          {"total_weight", total_weight},
          {"as_path_length", hist(as_lengths)},
          {"ixp_path_length", hist(ixp_lengths)},
          {"stability",
           {{"probes", stability.size()},
            {"mean", stability.empty() ? nlohmann::json() : nlohmann::json(mean)}}},
          {"curves", curves_json},
          {"warnings", warnings}};
}

CoverageAnalysis AnalyzeTarget(const std::vector<TracerouteRecord>& records, const RibTable& rib,
                               const IxpTable& ixp, const std::string& target,
                               const std::vector<VantagePoint>* external_ranking, size_t k_max,
                               PopWeighting weighting) {
  CoverageAnalysis a;
  a.target = target;
  for (const auto& r : records) a.failed_records += r.target == target && r.failed();
  PathSet set = BuildPathSet(records, rib, ixp, {target, std::nullopt});
  a.probes = set.size();
  for (const auto& p : set) a.total_weight += p.weight;
  a.as_lengths = PathLengthDistribution(set, VantagePoint::Kind::kAs);
  a.ixp_lengths = PathLengthDistribution(set, VantagePoint::Kind::kIxp);
  a.stability = StabilityByProbe(records, rib, ixp, target);

  a.curves.push_back(ComputeCoverageCurve(set, "pop", RankPop(set, std::nullopt, weighting), k_max));
  if (external_ranking) {
    a.curves.push_back(ComputeCoverageCurve(set, "external", *external_ranking, k_max));
  }
  for (const auto& c : a.curves) {
    if (c.truncated) {
      a.warnings.push_back(c.ranking + " ranking has " + std::to_string(c.points.size() - 1) +
                           " entries; curve truncated below k_max " + std::to_string(k_max));
    }
  }
  return a;
}

}  // namespace ctga
