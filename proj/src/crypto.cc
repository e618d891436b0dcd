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

#include "ctga/crypto.h"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <stdexcept>

namespace ctga {

Digest Sha256(ByteSpan data) {
  Digest out;
  SHA256(data.data(), data.size(), out.data());
  return out;
}

Digest Sha256(std::string_view data) { return Sha256(AsBytes(data)); }

std::string HexEncode(ByteSpan data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (uint8_t b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

namespace {

int HexValue(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

bool IsBase64Char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
         (c >= '0' && c <= '9') || c == '+' || c == '/';
}

}  // namespace

std::optional<Bytes> HexDecode(std::string_view hex) {
  if (hex.size() % 2 != 0) return std::nullopt;
  Bytes out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    int hi = HexValue(hex[i]);
    int lo = HexValue(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<uint8_t>(hi << 4 | lo));
  }
  return out;
}

std::string Base64Encode(ByteSpan data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                          data.data(), static_cast<int>(data.size()));
  out.resize(static_cast<size_t>(n));
  return out;
}

std::optional<Bytes> Base64Decode(std::string_view text) {
  // EVP_DecodeBlock tolerates whitespace and does not report padding, so the
  // strict syntax check happens here.
  if (text.size() % 4 != 0) return std::nullopt;
  size_t padding = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '=') {
      if (i + 2 < text.size()) return std::nullopt;
      ++padding;
    } else if (padding > 0 || !IsBase64Char(c)) {
      return std::nullopt;
    }
  }
  Bytes out(text.size() / 4 * 3);
  if (text.empty()) return out;
  int n = EVP_DecodeBlock(out.data(),
                          reinterpret_cast<const unsigned char*>(text.data()),
                          static_cast<int>(text.size()));
  if (n < 0) return std::nullopt;
  out.resize(static_cast<size_t>(n) - padding);
  return out;
}

std::string_view SignatureSchemeName(SignatureScheme scheme) {
  switch (scheme) {
    case SignatureScheme::kTestMac:
      return "test-mac";
    case SignatureScheme::kEd25519:
      return "ed25519";
  }
  return "unknown";
}

std::optional<SignatureScheme> ParseSignatureScheme(std::string_view name) {
  if (name == "test-mac") return SignatureScheme::kTestMac;
  if (name == "ed25519") return SignatureScheme::kEd25519;
  return std::nullopt;
}

TestMacSigner::TestMacSigner(Bytes key) : key_(std::move(key)) {
  if (key_.empty()) throw std::invalid_argument("empty MAC key");
}

namespace {

Bytes HmacSha256(ByteSpan key, ByteSpan message) {
  Bytes out(EVP_MAX_MD_SIZE);
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(),
       message.size(), out.data(), &len);
  out.resize(len);
  return out;
}

struct PkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct MdCtxDeleter {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
using PkeyPtr = std::unique_ptr<EVP_PKEY, PkeyDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, MdCtxDeleter>;

}  // namespace

Bytes TestMacSigner::Sign(ByteSpan message) const {
  return HmacSha256(key_, message);
}

struct Ed25519Signer::KeyHandle {
  PkeyPtr pkey;
};

Ed25519Signer::Ed25519Signer(ByteSpan seed) : key_(new KeyHandle) {
  if (seed.size() != 32) throw std::invalid_argument("Ed25519 seed must be 32 bytes");
  key_->pkey.reset(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr,
                                                seed.data(), seed.size()));
  if (!key_->pkey) throw std::runtime_error("Ed25519 key import failed");
  size_t len = 32;
  public_key_.resize(len);
  if (EVP_PKEY_get_raw_public_key(key_->pkey.get(), public_key_.data(), &len) != 1) {
    throw std::runtime_error("Ed25519 public key export failed");
  }
  public_key_.resize(len);
}

Ed25519Signer::~Ed25519Signer() = default;

Bytes Ed25519Signer::Sign(ByteSpan message) const {
  MdCtxPtr ctx(EVP_MD_CTX_new());
  if (!ctx || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr,
                                 key_->pkey.get()) != 1) {
    throw std::runtime_error("Ed25519 sign init failed");
  }
  size_t len = 64;
  Bytes sig(len);
  if (EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(),
                     message.size()) != 1) {
    throw std::runtime_error("Ed25519 sign failed");
  }
  sig.resize(len);
  return sig;
}

bool VerifySignature(SignatureScheme scheme, ByteSpan public_key,
                     ByteSpan message, ByteSpan signature) {
  switch (scheme) {
    case SignatureScheme::kTestMac: {
      if (public_key.empty()) return false;
      Bytes expected = HmacSha256(public_key, message);
      return expected.size() == signature.size() &&
             CRYPTO_memcmp(expected.data(), signature.data(),
                           expected.size()) == 0;
    }
    case SignatureScheme::kEd25519: {
      if (public_key.size() != 32 || signature.size() != 64) return false;
      PkeyPtr pkey(EVP_PKEY_new_raw_public_key(
          EVP_PKEY_ED25519, nullptr, public_key.data(), public_key.size()));
      if (!pkey) return false;
      MdCtxPtr ctx(EVP_MD_CTX_new());
      if (!ctx || EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr,
                                       pkey.get()) != 1) {
        return false;
      }
      return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(),
                              message.data(), message.size()) == 1;
    }
  }
  return false;
}

}  // namespace ctga
