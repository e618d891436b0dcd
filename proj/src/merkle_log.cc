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

#include <istream>
#include <ostream>

#include <json.hpp>

namespace ctga {

bool IsValidLogName(std::string_view name) {
  if (name.empty() || name.size() > 63) return false;
  if (name.front() == '-' || name.back() == '-') return false;
  for (char c : name) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
    if (!ok) return false;
  }
  return true;
}

LogId LogId::ForKey(std::string name, ByteSpan public_key) {
  return LogId{Sha256(public_key), std::move(name)};
}

Bytes SerializeTreeHead(uint64_t tree_size, uint64_t timestamp,
                        const Digest& root_hash) {
  Bytes out;
  out.reserve(1 + 8 + 8 + kDigestSize);
  out.push_back(0x00);
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<uint8_t>(tree_size >> shift));
  }
  for (int shift = 56; shift >= 0; shift -= 8) {
    out.push_back(static_cast<uint8_t>(timestamp >> shift));
  }
  out.insert(out.end(), root_hash.begin(), root_hash.end());
  return out;
}

bool VerifySth(const SignedTreeHead& sth, SignatureScheme scheme,
               ByteSpan public_key) {
  if (sth.tree_size == 0 && sth.root_hash != HashEmpty()) return false;
  Bytes message = SerializeTreeHead(sth.tree_size, sth.timestamp, sth.root_hash);
  return VerifySignature(scheme, public_key, message, sth.signature);
}

std::string ForkPolicy::BranchFor(std::string_view client_class) const {
  if (mode == ForkMode::kHonest) return std::string(MerkleLog::kMainBranch);
  auto it = branch_assignment.find(std::string(client_class));
  return it == branch_assignment.end() ? default_branch : it->second;
}

MerkleLog::MerkleLog(std::string name, LogPolicy policy,
                     std::shared_ptr<const Signer> signer)
    : policy_(policy), signer_(std::move(signer)) {
  if (!IsValidLogName(name)) throw ScenarioError("invalid log name: " + name);
  if (!policy_.Valid()) throw ScenarioError("invalid log policy");
  if (!signer_) throw ScenarioError("log requires a signer");
  id_ = LogId::ForKey(std::move(name), signer_->public_key());
  auto main = std::make_unique<Branch>();
  main->name = std::string(kMainBranch);
  branches_.push_back(std::move(main));
}

MerkleLog::Branch& MerkleLog::Get(std::string_view branch) {
  for (auto& b : branches_) {
    if (b->name == branch) return *b;
  }
  throw ScenarioError("unknown branch: " + std::string(branch));
}

const MerkleLog::Branch& MerkleLog::Get(std::string_view branch) const {
  return const_cast<MerkleLog*>(this)->Get(branch);
}

std::vector<std::string> MerkleLog::Branches() const {
  std::vector<std::string> out;
  for (const auto& b : branches_) out.push_back(b->name);
  return out;
}

bool MerkleLog::HasBranch(std::string_view branch) const {
  for (const auto& b : branches_) {
    if (b->name == branch) return true;
  }
  return false;
}

void MerkleLog::Fork(const std::string& new_branch, std::string_view from) {
  if (new_branch.empty() || HasBranch(new_branch)) {
    throw ScenarioError("branch already exists: " + new_branch);
  }
  const Branch& parent = Get(from);
  auto branch = std::make_unique<Branch>();
  branch->name = new_branch;
  branch->origin = {parent.name, parent.tree.size()};
  branch->tree = parent.tree;
  branch->leaves = parent.leaves;
  branch->issued_at = parent.issued_at;
  branch->latest = parent.latest;
  branches_.push_back(std::move(branch));
}

uint64_t MerkleLog::Append(std::string_view branch, ByteSpan leaf) {
  Branch& b = Get(branch);
  b.leaves.emplace_back(leaf.begin(), leaf.end());
  return b.tree.Append(leaf);
}

uint64_t MerkleLog::TreeSize(std::string_view branch) const {
  return Get(branch).tree.size();
}

Digest MerkleLog::RootAt(std::string_view branch, uint64_t size) const {
  return Get(branch).tree.RootAt(size);
}

std::vector<Digest> MerkleLog::ConsistencyProof(std::string_view branch,
                                                uint64_t m, uint64_t n) const {
  return Get(branch).tree.ConsistencyProof(m, n);
}

std::vector<Digest> MerkleLog::InclusionProof(std::string_view branch,
                                              uint64_t index,
                                              uint64_t size) const {
  return Get(branch).tree.InclusionProof(index, size);
}

const Bytes& MerkleLog::Leaf(std::string_view branch, uint64_t index) const {
  const Branch& b = Get(branch);
  if (index >= b.leaves.size()) throw std::out_of_range("leaf index out of range");
  return b.leaves[index];
}

bool MerkleLog::CanIssue(std::string_view branch, uint64_t now) const {
  const Branch& b = Get(branch);
  auto mmd = static_cast<uint64_t>(policy_.mmd.count());
  size_t in_window = 0;
  for (uint64_t t : b.issued_at) {
    if (t <= now && now - t < mmd) ++in_window;
  }
  return in_window < policy_.sth_frequency;
}

SignedTreeHead MerkleLog::IssueSth(std::string_view branch, uint64_t now) {
  if (!CanIssue(branch, now)) {
    throw PolicyError("STH frequency budget exhausted for branch " +
                      std::string(branch));
  }
  Branch& b = Get(branch);
  SignedTreeHead sth;
  sth.log_id = id_;
  sth.tree_size = b.tree.size();
  sth.timestamp = now;
  sth.root_hash = b.tree.RootAt(sth.tree_size);
  sth.signature = signer_->Sign(
      SerializeTreeHead(sth.tree_size, sth.timestamp, sth.root_hash));

  b.issued_at.push_back(now);
  auto mmd = static_cast<uint64_t>(policy_.mmd.count());
  while (!b.issued_at.empty() && b.issued_at.front() + mmd <= now) {
    b.issued_at.pop_front();
  }
  b.latest = sth;
  return sth;
}

std::optional<SignedTreeHead> MerkleLog::LatestSth(std::string_view branch) const {
  return Get(branch).latest;
}

void MerkleLog::SetForkPolicy(ForkPolicy policy) {
  if (policy.mode == ForkMode::kHonest) {
    if (branches_.size() != 1) {
      throw ScenarioError("honest fork policy on a forked log");
    }
  } else {
    if (!HasBranch(policy.default_branch)) {
      throw ScenarioError("unknown default branch: " + policy.default_branch);
    }
    for (const auto& [cls, branch] : policy.branch_assignment) {
      if (!HasBranch(branch)) {
        throw ScenarioError("class " + cls + " assigned to unknown branch " +
                            branch);
      }
    }
  }
  fork_policy_ = std::move(policy);
}

std::string MerkleLog::BranchForClass(std::string_view client_class) const {
  return fork_policy_.BranchFor(client_class);
}

std::optional<SignedTreeHead> MerkleLog::ServeSth(
    std::string_view client_class) const {
  return LatestSth(BranchForClass(client_class));
}

MerkleLog::BranchOrigin MerkleLog::Origin(std::string_view branch) const {
  return Get(branch).origin;
}

namespace {

using nlohmann::json;

std::string_view ForkModeName(ForkMode mode) {
  return mode == ForkMode::kHonest ? "honest" : "fork_by_client_class";
}

}  // namespace

void WriteLogFile(const MerkleLog& log, std::ostream& out) {
  json header;
  header["format"] = "ctga-log-v1";
  header["name"] = log.id().name;
  header["log_id"] = HexEncode(log.id().id);
  header["scheme"] = SignatureSchemeName(log.signer().scheme());
  header["policy"] = {{"mmd_ms", log.policy().mmd.count()},
                      {"sth_frequency", log.policy().sth_frequency}};
  const ForkPolicy& fork = log.fork_policy();
  header["fork"] = {{"mode", ForkModeName(fork.mode)},
                    {"default_branch", fork.default_branch},
                    {"assignments", fork.branch_assignment}};
  json branches = json::array();
  for (const std::string& name : log.Branches()) {
    auto origin = log.Origin(name);
    json b = {{"name", name},
              {"fork_size", origin.fork_size},
              {"leaves", log.TreeSize(name) - origin.fork_size}};
    b["parent"] = origin.parent.empty() ? json(nullptr) : json(origin.parent);
    branches.push_back(std::move(b));
  }
  header["branches"] = std::move(branches);
  out << header.dump() << '\n';

  for (const std::string& name : log.Branches()) {
    uint64_t size = log.TreeSize(name);
    for (uint64_t i = log.Origin(name).fork_size; i < size; ++i) {
      out << Base64Encode(log.Leaf(name, i)) << '\n';
    }
  }
}

MerkleLog ReadLogFile(std::istream& in, std::shared_ptr<const Signer> signer) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("log file: missing header");
  json header = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (header.is_discarded() || !header.is_object() ||
      header.value("format", "") != "ctga-log-v1") {
    throw std::runtime_error("log file: bad header");
  }
  try {
    LogPolicy policy;
    policy.mmd = Millis(header.at("policy").at("mmd_ms").get<int64_t>());
    policy.sth_frequency = header.at("policy").at("sth_frequency").get<uint32_t>();
    MerkleLog log(header.at("name").get<std::string>(), policy, std::move(signer));
    if (HexEncode(log.id().id) != header.at("log_id").get<std::string>()) {
      throw std::runtime_error("log file: signer does not match log id");
    }

    for (const json& b : header.at("branches")) {
      auto name = b.at("name").get<std::string>();
      uint64_t fork_size = b.at("fork_size").get<uint64_t>();
      if (name != MerkleLog::kMainBranch) {
        auto parent = b.at("parent").get<std::string>();
        if (log.TreeSize(parent) != fork_size) {
          throw std::runtime_error("log file: fork point mismatch for " + name);
        }
        log.Fork(name, parent);
      }
      uint64_t count = b.at("leaves").get<uint64_t>();
      for (uint64_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) throw std::runtime_error("log file: truncated");
        auto leaf = Base64Decode(line);
        if (!leaf) throw std::runtime_error("log file: bad base64 leaf");
        log.Append(name, *leaf);
      }
    }
    if (std::getline(in, line) && !line.empty()) {
      throw std::runtime_error("log file: trailing data");
    }

    const json& f = header.at("fork");
    ForkPolicy fork;
    auto mode = f.at("mode").get<std::string>();
    if (mode == "honest") {
      fork.mode = ForkMode::kHonest;
    } else if (mode == "fork_by_client_class") {
      fork.mode = ForkMode::kForkByClientClass;
    } else {
      throw std::runtime_error("log file: unknown fork mode " + mode);
    }
    fork.default_branch = f.at("default_branch").get<std::string>();
    fork.branch_assignment =
        f.at("assignments").get<std::map<std::string, std::string>>();
    log.SetForkPolicy(std::move(fork));
    return log;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("log file: ") + e.what());
  }
}

}  // namespace ctga
