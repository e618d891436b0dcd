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

#ifndef CTGA_CRYPTO_H_
#define CTGA_CRYPTO_H_

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctga {

using Bytes = std::vector<uint8_t>;
using ByteSpan = std::span<const uint8_t>;

inline constexpr size_t kDigestSize = 32;
using Digest = std::array<uint8_t, kDigestSize>;

Digest Sha256(ByteSpan data);
Digest Sha256(std::string_view data);

std::string HexEncode(ByteSpan data);
std::optional<Bytes> HexDecode(std::string_view hex);

// Standard (RFC 4648) alphabet with padding.
std::string Base64Encode(ByteSpan data);
std::optional<Bytes> Base64Decode(std::string_view text);

inline ByteSpan AsBytes(std::string_view s) {
  return {reinterpret_cast<const uint8_t*>(s.data()), s.size()};
}

enum class SignatureScheme : uint8_t {
  // HMAC-SHA256 under a shared key. Deterministic, used for fixtures; the
  // "public key" is the MAC key itself.
  kTestMac = 1,
  kEd25519 = 2,
};

std::string_view SignatureSchemeName(SignatureScheme scheme);
std::optional<SignatureScheme> ParseSignatureScheme(std::string_view name);

// A log's signing key. Implementations are immutable after construction and
// safe to share between threads.
class Signer {
 public:
  virtual ~Signer() = default;
  virtual SignatureScheme scheme() const = 0;
  virtual Bytes public_key() const = 0;
  virtual Bytes Sign(ByteSpan message) const = 0;
};

class TestMacSigner final : public Signer {
 public:
  explicit TestMacSigner(Bytes key);

  SignatureScheme scheme() const override { return SignatureScheme::kTestMac; }
  Bytes public_key() const override { return key_; }
  Bytes Sign(ByteSpan message) const override;

 private:
  Bytes key_;
};

class Ed25519Signer final : public Signer {
 public:
  // |seed| is the 32-byte RFC 8032 private key.
  explicit Ed25519Signer(ByteSpan seed);
  ~Ed25519Signer() override;

  Ed25519Signer(const Ed25519Signer&) = delete;
  Ed25519Signer& operator=(const Ed25519Signer&) = delete;

  SignatureScheme scheme() const override { return SignatureScheme::kEd25519; }
  Bytes public_key() const override { return public_key_; }
  Bytes Sign(ByteSpan message) const override;

 private:
  struct KeyHandle;
  std::unique_ptr<KeyHandle> key_;
  Bytes public_key_;
};

// Verification needs only public material, so third parties can check
// signatures from a serialized report.
bool VerifySignature(SignatureScheme scheme, ByteSpan public_key,
                     ByteSpan message, ByteSpan signature);

}  // namespace ctga

#endif  // CTGA_CRYPTO_H_
