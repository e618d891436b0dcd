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

#ifndef CTGA_MERKLE_LOG_H_
#define CTGA_MERKLE_LOG_H_

#include <chrono>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ctga/crypto.h"
#include "ctga/merkle_tree.h"

namespace ctga {

using Millis = std::chrono::milliseconds;

// Lowercase letters, digits and inner hyphens; at most 63 bytes.
bool IsValidLogName(std::string_view name);

struct LogId {
  Digest id{};
  std::string name;

  // The id is the SHA-256 of the log's public key, as in RFC 6962.
  static LogId ForKey(std::string name, ByteSpan public_key);

  friend bool operator==(const LogId&, const LogId&) = default;
};

struct SignedTreeHead {
  LogId log_id;
  uint64_t tree_size = 0;
  uint64_t timestamp = 0;  // ms since epoch
  Digest root_hash{};
  Bytes signature;

  friend bool operator==(const SignedTreeHead&, const SignedTreeHead&) = default;
};

// version(0x00) || tree_size (8, BE) || timestamp (8, BE) || root_hash.
Bytes SerializeTreeHead(uint64_t tree_size, uint64_t timestamp,
                        const Digest& root_hash);

bool VerifySth(const SignedTreeHead& sth, SignatureScheme scheme,
               ByteSpan public_key);

struct LogPolicy {
  Millis mmd = std::chrono::hours(24);
  uint32_t sth_frequency = 24;

  bool Valid() const { return mmd.count() > 0 && sth_frequency >= 1; }
};

enum class ForkMode { kHonest, kForkByClientClass };

struct ForkPolicy {
  ForkMode mode = ForkMode::kHonest;
  std::map<std::string, std::string> branch_assignment;  // class -> branch
  std::string default_branch = "main";

  std::string BranchFor(std::string_view client_class) const;
};

// Issuing more STHs than the policy allows within an MMD window.
class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unknown branch, duplicate fork, invalid fork policy.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An append-only log with optional forked branches. Each branch is a full
// Merkle tree; a fork copies its parent's current state and then evolves
// independently. Single writer per branch.
class MerkleLog {
 public:
  static constexpr std::string_view kMainBranch = "main";

  MerkleLog(std::string name, LogPolicy policy,
            std::shared_ptr<const Signer> signer);

  const LogId& id() const { return id_; }
  const LogPolicy& policy() const { return policy_; }
  const Signer& signer() const { return *signer_; }
  std::shared_ptr<const Signer> shared_signer() const { return signer_; }

  // Branch names in creation order; "main" is always first.
  std::vector<std::string> Branches() const;
  bool HasBranch(std::string_view branch) const;
  void Fork(const std::string& new_branch, std::string_view from);

  uint64_t Append(std::string_view branch, ByteSpan leaf);
  uint64_t TreeSize(std::string_view branch) const;
  Digest RootAt(std::string_view branch, uint64_t size) const;
  std::vector<Digest> ConsistencyProof(std::string_view branch, uint64_t m,
                                       uint64_t n) const;
  std::vector<Digest> InclusionProof(std::string_view branch, uint64_t index,
                                     uint64_t size) const;
  const Bytes& Leaf(std::string_view branch, uint64_t index) const;

  // Throws PolicyError when the branch has already issued sth_frequency
  // STHs within the MMD window ending at |now|.
  SignedTreeHead IssueSth(std::string_view branch, uint64_t now);
  bool CanIssue(std::string_view branch, uint64_t now) const;
  std::optional<SignedTreeHead> LatestSth(std::string_view branch) const;

  // Every branch named by the policy must exist; honest mode requires a log
  // without forks.
  void SetForkPolicy(ForkPolicy policy);
  const ForkPolicy& fork_policy() const { return fork_policy_; }

  // Latest STH of the branch assigned to |client_class|; nullopt if that
  // branch has not issued yet.
  std::optional<SignedTreeHead> ServeSth(std::string_view client_class) const;
  std::string BranchForClass(std::string_view client_class) const;

  // Fork origin of each branch, used by the log file writer.
  struct BranchOrigin {
    std::string parent;
    uint64_t fork_size = 0;
  };
  BranchOrigin Origin(std::string_view branch) const;

 private:
  struct Branch {
    std::string name;
    BranchOrigin origin;
    MerkleTree tree;
    std::vector<Bytes> leaves;
    std::deque<uint64_t> issued_at;
    std::optional<SignedTreeHead> latest;
  };

  Branch& Get(std::string_view branch);
  const Branch& Get(std::string_view branch) const;

  LogId id_;
  LogPolicy policy_;
  std::shared_ptr<const Signer> signer_;
  ForkPolicy fork_policy_;
  std::vector<std::unique_ptr<Branch>> branches_;
};

// Line-delimited log state: one JSON header line, then one base64 leaf per
// line for each branch in header order (only leaves appended after the fork
// point). See README for the header schema.
void WriteLogFile(const MerkleLog& log, std::ostream& out);
// Throws std::runtime_error on a malformed file. The signer must match the
// log id recorded in the header.
MerkleLog ReadLogFile(std::istream& in, std::shared_ptr<const Signer> signer);

}  // namespace ctga

#endif  // CTGA_MERKLE_LOG_H_
