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

#ifndef CTGA_MERKLE_TREE_H_
#define CTGA_MERKLE_TREE_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ctga/crypto.h"

namespace ctga {

// RFC 6962 hashing: SHA-256 with a 0x00 prefix for leaves and 0x01 for
// interior nodes. The tree of zero leaves hashes to SHA-256("").
Digest HashEmpty();
Digest HashLeaf(ByteSpan leaf);
Digest HashChildren(const Digest& left, const Digest& right);

// Append-only Merkle tree over leaf hashes. Complete subtrees are cached per
// level so that any historical root or proof costs O(log^2 n) hashes.
class MerkleTree {
 public:
  MerkleTree() = default;

  uint64_t size() const { return levels_.empty() ? 0 : levels_[0].size(); }

  // Returns the new tree size.
  uint64_t Append(ByteSpan leaf);
  uint64_t AppendLeafHash(const Digest& leaf_hash);

  // Throws std::out_of_range if |tree_size| > size().
  Digest RootAt(uint64_t tree_size) const;
  const Digest& LeafHash(uint64_t index) const;

  // Audit path for leaf |index| in the tree of the first |tree_size| leaves.
  // Requires index < tree_size <= size(); throws std::out_of_range otherwise.
  std::vector<Digest> InclusionProof(uint64_t index, uint64_t tree_size) const;

  // Requires old_size <= new_size <= size(). Empty when the sizes are equal
  // or old_size is zero.
  std::vector<Digest> ConsistencyProof(uint64_t old_size,
                                       uint64_t new_size) const;

 private:
  Digest SubtreeHash(uint64_t begin, uint64_t end) const;
  void PathInto(uint64_t index, uint64_t begin, uint64_t end,
                std::vector<Digest>& out) const;
  void SubproofInto(uint64_t m, uint64_t begin, uint64_t end, bool complete,
                    std::vector<Digest>& out) const;

  // levels_[k][i] is the hash of the complete subtree covering leaves
  // [i * 2^k, (i + 1) * 2^k).
  std::vector<std::vector<Digest>> levels_;
};

// Pure verifiers; malformed input yields false, never an exception.
bool VerifyInclusion(ByteSpan leaf, uint64_t index, uint64_t tree_size,
                     const Digest& root, std::span<const Digest> proof);
bool VerifyInclusionByHash(const Digest& leaf_hash, uint64_t index,
                           uint64_t tree_size, const Digest& root,
                           std::span<const Digest> proof);
bool VerifyConsistency(const Digest& old_root, uint64_t old_size,
                       const Digest& new_root, uint64_t new_size,
                       std::span<const Digest> proof);

}  // namespace ctga

#endif  // CTGA_MERKLE_TREE_H_
