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

#include "merkle_oracle.h"

#include <openssl/evp.h>

#include <random>
#include <stdexcept>

namespace oracle {

Hash Sha256(const std::vector<uint8_t>& data) {
  Hash out;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1 ||
      len != out.size()) {
    throw std::runtime_error("EVP_Digest failed");
  }
  return out;
}

namespace {

size_t LargestPowerOfTwoBelow(size_t n) {
  size_t k = 1;
  while (k * 2 < n) k *= 2;
  return k;
}

std::vector<uint8_t> Concat(uint8_t prefix, const Hash& a, const Hash& b) {
  std::vector<uint8_t> v{prefix};
  v.insert(v.end(), a.begin(), a.end());
  v.insert(v.end(), b.begin(), b.end());
  return v;
}

std::vector<Hash> Subproof(const std::vector<Leaf>& leaves, size_t m,
                           size_t begin, size_t end, bool b) {
  size_t n = end - begin;
  if (m == n) {
    if (b) return {};
    return {Mth(leaves, begin, end)};
  }
  size_t k = LargestPowerOfTwoBelow(n);
  std::vector<Hash> out;
  if (m <= k) {
    out = Subproof(leaves, m, begin, begin + k, b);
    out.push_back(Mth(leaves, begin + k, end));
  } else {
    out = Subproof(leaves, m - k, begin + k, end, false);
    out.push_back(Mth(leaves, begin, begin + k));
  }
  return out;
}

}  // namespace

Hash Mth(const std::vector<Leaf>& leaves, size_t begin, size_t end) {
  size_t n = end - begin;
  if (n == 0) return Sha256({});
  if (n == 1) {
    std::vector<uint8_t> v{0x00};
    v.insert(v.end(), leaves[begin].begin(), leaves[begin].end());
    return Sha256(v);
  }
  size_t k = LargestPowerOfTwoBelow(n);
  return Sha256(Concat(0x01, Mth(leaves, begin, begin + k),
                       Mth(leaves, begin + k, end)));
}

std::vector<Hash> Path(const std::vector<Leaf>& leaves, size_t m, size_t begin,
                       size_t end) {
  size_t n = end - begin;
  if (n == 1) return {};
  size_t k = LargestPowerOfTwoBelow(n);
  std::vector<Hash> out;
  if (m < k) {
    out = Path(leaves, m, begin, begin + k);
    out.push_back(Mth(leaves, begin + k, end));
  } else {
    out = Path(leaves, m - k, begin + k, end);
    out.push_back(Mth(leaves, begin, begin + k));
  }
  return out;
}

std::vector<Hash> Proof(const std::vector<Leaf>& leaves, size_t m, size_t n) {
  if (m == 0 || m == n) return {};
  return Subproof(leaves, m, 0, n, true);
}

std::vector<Leaf> MakeLeaves(size_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Leaf> out;
  for (size_t i = 0; i < n; ++i) {
    Leaf leaf(rng() % 48);
    for (auto& b : leaf) b = static_cast<uint8_t>(rng());
    out.push_back(std::move(leaf));
  }
  return out;
}

}  // namespace oracle
