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

// Traceroute-based coverage analysis: which ASes and IXPs sit between probes
// and a target, weighted by each probe's AS address space.

#ifndef CTGA_COVERAGE_H_
#define CTGA_COVERAGE_H_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ctga {

class CoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::optional<uint32_t> ParseIpv4(std::string_view text);
std::string FormatIpv4(uint32_t addr);

struct Ipv4Prefix {
  uint32_t address = 0;  // host bits cleared
  uint8_t length = 0;

  bool Contains(uint32_t addr) const;
  uint64_t Size() const { return uint64_t{1} << (32 - length); }
  std::string ToString() const;
  friend auto operator<=>(const Ipv4Prefix&, const Ipv4Prefix&) = default;
};
// "a.b.c.d/len"; host bits must be zero.
std::optional<Ipv4Prefix> ParsePrefix(std::string_view text);

// Binary trie keyed on prefix bits. A later Insert of the same prefix
// replaces the value.
template <typename V>
class PrefixTrie {
 public:
  void Insert(const Ipv4Prefix& prefix, V value) {
    Node* n = &root_;
    for (uint8_t i = 0; i < prefix.length; ++i) {
      int bit = (prefix.address >> (31 - i)) & 1;
      if (!n->child[bit]) n->child[bit] = std::make_unique<Node>();
      n = n->child[bit].get();
    }
    if (!n->value) ++size_;
    n->value = std::move(value);
  }

  struct Match {
    Ipv4Prefix prefix;
    const V* value;
  };
  std::optional<Match> Lookup(uint32_t addr) const {
    std::optional<Match> best;
    const Node* n = &root_;
    for (uint8_t depth = 0;; ++depth) {
      if (n->value) {
        uint32_t mask = depth ? ~uint32_t{0} << (32 - depth) : 0;
        best = Match{Ipv4Prefix{addr & mask, depth}, &*n->value};
      }
      if (depth == 32) break;
      n = n->child[(addr >> (31 - depth)) & 1].get();
      if (!n) break;
    }
    return best;
  }

  size_t size() const { return size_; }

  // Calls fn(value, count) with the number of addresses whose longest match
  // carries that value. Each address is counted once.
  template <typename F>
  void ForEachOwnedSpan(F&& fn) const {
    Walk(root_, 0, nullptr, fn);
  }

 private:
  struct Node {
    std::unique_ptr<Node> child[2];
    std::optional<V> value;
  };

  template <typename F>
  static void Walk(const Node& n, int depth, const V* owner, F& fn) {
    if (n.value) owner = &*n.value;
    if (!owner && !n.child[0] && !n.child[1]) return;
    for (int b = 0; b < 2; ++b) {
      if (depth == 32) break;
      if (n.child[b]) {
        Walk(*n.child[b], depth + 1, owner, fn);
      } else if (owner) {
        fn(*owner, uint64_t{1} << (31 - depth));
      }
    }
    if (depth == 32 && owner) fn(*owner, 1);
  }

  Node root_;
  size_t size_ = 0;
};

struct LoadStats {
  size_t rows = 0;
  size_t skipped = 0;
};

// `prefix,asn` rows; a header line and blank lines are ignored.
class RibTable {
 public:
  void Add(const Ipv4Prefix& prefix, uint32_t asn);
  std::optional<uint32_t> Lookup(uint32_t addr) const;
  // Addresses originated per AS, each address attributed once to its most
  // specific covering prefix.
  std::map<uint32_t, uint64_t> AddressSpace() const;
  size_t size() const { return trie_.size(); }

 private:
  PrefixTrie<uint32_t> trie_;
};
RibTable LoadRib(std::istream& in, LoadStats* stats = nullptr);
RibTable LoadRibFile(const std::string& path, LoadStats* stats = nullptr);

struct IxpInfo {
  uint32_t id = 0;
  std::string name;
};
// `prefix,ixp_id,name` rows.
class IxpTable {
 public:
  void Add(const Ipv4Prefix& prefix, IxpInfo info);
  std::optional<IxpInfo> Lookup(uint32_t addr) const;
  size_t size() const { return trie_.size(); }

 private:
  PrefixTrie<IxpInfo> trie_;
};
IxpTable LoadIxp(std::istream& in, LoadStats* stats = nullptr);
IxpTable LoadIxpFile(const std::string& path, LoadStats* stats = nullptr);

struct VantagePoint {
  enum class Kind { kAs, kIxp };
  Kind kind = Kind::kAs;
  uint32_t id = 0;

  static VantagePoint As(uint32_t asn) { return {Kind::kAs, asn}; }
  static VantagePoint Ixp(uint32_t id) { return {Kind::kIxp, id}; }
  // "AS1299" / "IXP42"
  std::string ToString() const;
  friend auto operator<=>(const VantagePoint&, const VantagePoint&) = default;
};
// Accepts "AS1299", "1299" (an AS) and "IXP42".
std::optional<VantagePoint> ParseVantagePoint(std::string_view text);

struct TracerouteRecord {
  uint64_t probe_id = 0;
  std::optional<uint32_t> probe_asn;
  std::optional<uint32_t> probe_address;
  std::string target;
  std::optional<uint32_t> target_asn;
  std::optional<uint32_t> target_address;
  uint32_t day = 0;
  std::vector<std::optional<uint32_t>> hops;  // nullopt: no reply

  // No hop replied.
  bool failed() const;
};

inline constexpr uint32_t kMeasurementDays = 20;

// Either a JSON array of RIPE Atlas traceroute results, or JSON-lines with
// {probe_id, probe_asn, target, target_asn, day, hops} objects. Rows that do
// not parse are skipped and counted; a file with no usable row throws.
std::vector<TracerouteRecord> LoadTraceroutes(std::istream& in,
                                              LoadStats* stats = nullptr);
std::vector<TracerouteRecord> LoadTraceroutesFile(const std::string& path,
                                                  LoadStats* stats = nullptr);
// `probe_id,asn` rows (probe metadata); fills in missing probe_asn values.
size_t ApplyProbeAsns(std::istream& in, std::vector<TracerouteRecord>* records);

struct AnnotatedPath {
  uint64_t probe_id = 0;
  std::optional<uint32_t> probe_asn;
  std::vector<VantagePoint> path;
  size_t unmapped_hops = 0;
  size_t missing_hops = 0;

  size_t Length(VantagePoint::Kind kind) const;
};

// IXP table first, then longest-prefix ASN. Consecutive duplicates collapse;
// the leading run in the probe's AS and the trailing run in the target's AS
// are removed. The target AS is the record's, else the RIB origin of its
// address, else the AS of the last mapped hop.
AnnotatedPath Annotate(const TracerouteRecord& record, const RibTable& rib,
                       const IxpTable& ixp);

struct WeightedPath {
  uint64_t probe_id = 0;
  uint64_t weight = 0;
  std::vector<VantagePoint> path;
};
using PathSet = std::vector<WeightedPath>;

struct PathSetOptions {
  std::string target;
  // Which day to use per probe; by default each probe's earliest successful
  // day.
  std::optional<uint32_t> day;
};
// One path per probe with a successful record toward the target, weighted
// by the address space of the probe's AS.
PathSet BuildPathSet(const std::vector<TracerouteRecord>& records,
                     const RibTable& rib, const IxpTable& ixp,
                     const PathSetOptions& options);

// Path length -> weighted fraction. Throws CoverageError when empty or
// weightless.
std::map<size_t, double> PathLengthDistribution(const PathSet& set,
                                                VantagePoint::Kind kind);

// Fraction of adjacent-day pairs (d, d+1), both present, whose vantage point
// sets are equal. nullopt when no such pair exists.
std::optional<double> PathStability(
    const std::map<uint32_t, std::set<VantagePoint>>& by_day);

struct ProbeStability {
  uint64_t probe_id = 0;
  size_t days = 0;
  double stability = 0;
};
std::vector<ProbeStability> StabilityByProbe(
    const std::vector<TracerouteRecord>& records, const RibTable& rib,
    const IxpTable& ixp, const std::string& target);

double Coverage(const PathSet& set, const std::set<VantagePoint>& aggregators);

enum class PopWeighting { kWeighted, kRaw };
// Descending by summed probe weight (or probe count), ties by identifier.
// |kind| restricts the ranking to ASes or IXPs.
std::vector<VantagePoint> RankPop(
    const PathSet& set, std::optional<VantagePoint::Kind> kind = std::nullopt,
    PopWeighting weighting = PopWeighting::kWeighted);

// `rank,vantage_point` rows sorted by rank; a bare vantage point per line
// takes its line order as rank.
std::vector<VantagePoint> LoadRanking(std::istream& in, LoadStats* stats = nullptr);
std::vector<VantagePoint> LoadRankingFile(const std::string& path,
                                          LoadStats* stats = nullptr);

struct CoveragePoint {
  size_t k = 0;
  double coverage = 0;
  std::optional<VantagePoint> added;  // the k-th ranking entry
};
struct CoverageCurve {
  std::string ranking;
  std::vector<CoveragePoint> points;  // k = 0..min(k_max, ranking size)
  bool truncated = false;
};
CoverageCurve ComputeCoverageCurve(const PathSet& set, std::string ranking_name,
                                   const std::vector<VantagePoint>& ranking,
                                   size_t k_max);

// CSV writers; columns are listed in the first row.
void WriteHistogramCsv(std::ostream& out, const std::string& target,
                       VantagePoint::Kind kind,
                       const std::map<size_t, double>& histogram);
void WriteCurveCsv(std::ostream& out, const std::string& target,
                   const CoverageCurve& curve);
void WriteStabilityCsv(std::ostream& out, const std::string& target,
                       const std::vector<ProbeStability>& rows);

// Full analysis over one target, as run by the coverage subcommand.
struct CoverageAnalysis {
  std::string target;
  size_t probes = 0;
  size_t failed_records = 0;
  uint64_t total_weight = 0;
  std::map<size_t, double> as_lengths;
  std::map<size_t, double> ixp_lengths;
  std::vector<ProbeStability> stability;
  std::vector<CoverageCurve> curves;
  std::vector<std::string> warnings;

  nlohmann::json Summary() const;
};
CoverageAnalysis AnalyzeTarget(const std::vector<TracerouteRecord>& records,
                               const RibTable& rib, const IxpTable& ixp,
                               const std::string& target,
                               const std::vector<VantagePoint>* external_ranking,
                               size_t k_max, PopWeighting weighting);

}  // namespace ctga

#endif  // CTGA_COVERAGE_H_
