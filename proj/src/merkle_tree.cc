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

#include "ctga/merkle_tree.h"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

namespace ctga {

namespace {

// Largest power of two strictly smaller than n (n >= 2).
uint64_t SplitPoint(uint64_t n) { return std::bit_floor(n - 1); }

}  // namespace

Digest HashEmpty() { return Sha256(ByteSpan{}); }

Digest HashLeaf(ByteSpan leaf) {
  Bytes buf;
  buf.reserve(leaf.size() + 1);
  buf.push_back(0x00);
  buf.insert(buf.end(), leaf.begin(), leaf.end());
  return Sha256(buf);
}

Digest HashChildren(const Digest& left, const Digest& right) {
  std::array<uint8_t, 1 + 2 * kDigestSize> buf;
  buf[0] = 0x01;
  std::copy(left.begin(), left.end(), buf.begin() + 1);
  std::copy(right.begin(), right.end(), buf.begin() + 1 + kDigestSize);
  return Sha256(buf);
}

uint64_t MerkleTree::Append(ByteSpan leaf) {
  return AppendLeafHash(HashLeaf(leaf));
}

uint64_t MerkleTree::AppendLeafHash(const Digest& leaf_hash) {
  if (levels_.empty()) levels_.emplace_back();
  levels_[0].push_back(leaf_hash);
  for (size_t level = 0; levels_[level].size() % 2 == 0; ++level) {
    if (level + 1 == levels_.size()) levels_.emplace_back();
    const auto& row = levels_[level];
    levels_[level + 1].push_back(
        HashChildren(row[row.size() - 2], row[row.size() - 1]));
  }
  return size();
}

const Digest& MerkleTree::LeafHash(uint64_t index) const {
  if (index >= size()) throw std::out_of_range("leaf index out of range");
  return levels_[0][index];
}

Digest MerkleTree::SubtreeHash(uint64_t begin, uint64_t end) const {
  uint64_t n = end - begin;
  if (std::has_single_bit(n) && begin % n == 0) {
    auto level = static_cast<size_t>(std::countr_zero(n));
    return levels_[level][begin >> level];
  }
  uint64_t k = SplitPoint(n);
  return HashChildren(SubtreeHash(begin, begin + k), SubtreeHash(begin + k, end));
}

Digest MerkleTree::RootAt(uint64_t tree_size) const {
  if (tree_size > size()) {
    throw std::out_of_range("tree size " + std::to_string(tree_size) +
                            " exceeds " + std::to_string(size()));
  }
  if (tree_size == 0) return HashEmpty();
  return SubtreeHash(0, tree_size);
}

void MerkleTree::PathInto(uint64_t index, uint64_t begin, uint64_t end,
                          std::vector<Digest>& out) const {
  uint64_t n = end - begin;
  if (n == 1) return;
  uint64_t k = SplitPoint(n);
  if (index < k) {
    PathInto(index, begin, begin + k, out);
    out.push_back(SubtreeHash(begin + k, end));
  } else {
    PathInto(index - k, begin + k, end, out);
    out.push_back(SubtreeHash(begin, begin + k));
  }
}

std::vector<Digest> MerkleTree::InclusionProof(uint64_t index,
                                               uint64_t tree_size) const {
  if (tree_size > size() || index >= tree_size) {
    throw std::out_of_range("inclusion proof index/size out of range");
  }
  std::vector<Digest> proof;
  PathInto(index, 0, tree_size, proof);
  return proof;
}

void MerkleTree::SubproofInto(uint64_t m, uint64_t begin, uint64_t end,
                              bool complete, std::vector<Digest>& out) const {
  uint64_t n = end - begin;
  if (m == n) {
    if (!complete) out.push_back(SubtreeHash(begin, end));
    return;
  }
  uint64_t k = SplitPoint(n);
  if (m <= k) {
    SubproofInto(m, begin, begin + k, complete, out);
    out.push_back(SubtreeHash(begin + k, end));
  } else {
    SubproofInto(m - k, begin + k, end, false, out);
    out.push_back(SubtreeHash(begin, begin + k));
  }
}

std::vector<Digest> MerkleTree::ConsistencyProof(uint64_t old_size,
                                                 uint64_t new_size) const {
  if (old_size > new_size || new_size > size()) {
    throw std::out_of_range("consistency proof sizes out of range");
  }
  std::vector<Digest> proof;
  if (old_size == 0 || old_size == new_size) return proof;
  SubproofInto(old_size, 0, new_size, true, proof);
  return proof;
}

bool VerifyInclusion(ByteSpan leaf, uint64_t index, uint64_t tree_size,
                     const Digest& root, std::span<const Digest> proof) {
  return VerifyInclusionByHash(HashLeaf(leaf), index, tree_size, root, proof);
}

bool VerifyInclusionByHash(const Digest& leaf_hash, uint64_t index,
                           uint64_t tree_size, const Digest& root,
                           std::span<const Digest> proof) {
  if (index >= tree_size) return false;
  uint64_t fn = index;
  uint64_t sn = tree_size - 1;
  Digest r = leaf_hash;
  for (const Digest& p : proof) {
    if (sn == 0) return false;
    if ((fn & 1) == 1 || fn == sn) {
      r = HashChildren(p, r);
      while ((fn & 1) == 0 && fn != 0) {
        fn >>= 1;
        sn >>= 1;
      }
    } else {
      r = HashChildren(r, p);
    }
    fn >>= 1;
    sn >>= 1;
  }
  return sn == 0 && r == root;
}

bool VerifyConsistency(const Digest& old_root, uint64_t old_size,
                       const Digest& new_root, uint64_t new_size,
                       std::span<const Digest> proof) {
  if (old_size > new_size) return false;
  if (old_size == new_size) return proof.empty() && old_root == new_root;
  if (old_size == 0) return proof.empty();
  if (proof.empty()) return false;

  // When the old tree is a complete subtree its root is the implicit first
  // element of the path.
  std::vector<Digest> path;
  path.reserve(proof.size() + 1);
  if (std::has_single_bit(old_size)) path.push_back(old_root);
  path.insert(path.end(), proof.begin(), proof.end());

  uint64_t fn = old_size - 1;
  uint64_t sn = new_size - 1;
  while ((fn & 1) == 1) {
    fn >>= 1;
    sn >>= 1;
  }
  Digest fr = path[0];
  Digest sr = path[0];
  for (size_t i = 1; i < path.size(); ++i) {
    const Digest& c = path[i];
    if (sn == 0) return false;
    if ((fn & 1) == 1 || fn == sn) {
      fr = HashChildren(c, fr);
      sr = HashChildren(c, sr);
      while ((fn & 1) == 0 && fn != 0) {
        fn >>= 1;
        sn >>= 1;
      }
    } else {
      sr = HashChildren(sr, c);
    }
    fn >>= 1;
    sn >>= 1;
  }
  return fr == old_root && sr == new_root && sn == 0;
}

}  // namespace ctga
