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

#include <gtest/gtest.h>

#include <random>

namespace ctga {
namespace {

TEST(CryptoTest, Base64KnownValues) {
  EXPECT_EQ(Base64Encode(AsBytes("")), "");
  EXPECT_EQ(Base64Encode(AsBytes("f")), "Zg==");
  EXPECT_EQ(Base64Encode(AsBytes("fo")), "Zm8=");
  EXPECT_EQ(Base64Encode(AsBytes("foobar")), "Zm9vYmFy");
  EXPECT_EQ(*Base64Decode("Zm8="), Bytes({'f', 'o'}));
}

TEST(CryptoTest, Base64RejectsMalformed) {
  EXPECT_FALSE(Base64Decode("Zm8"));
  EXPECT_FALSE(Base64Decode("Zm8*"));
  EXPECT_FALSE(Base64Decode("Z=8="));
  EXPECT_FALSE(Base64Decode(" Zm8="));
  EXPECT_FALSE(Base64Decode("Zm=="
                            "Zm8="));
}

TEST(CryptoTest, Base64RoundTrip) {
  std::mt19937 rng(1);
  for (int i = 0; i < 200; ++i) {
    Bytes data(rng() % 70);
    for (auto& b : data) b = static_cast<uint8_t>(rng());
    auto decoded = Base64Decode(Base64Encode(data));
    ASSERT_TRUE(decoded);
    EXPECT_EQ(*decoded, data);
  }
}

TEST(CryptoTest, HexRoundTrip) {
  Bytes data = {0x00, 0x7f, 0xff, 0x10};
  EXPECT_EQ(HexEncode(data), "007fff10");
  EXPECT_EQ(*HexDecode("007FFF10"), data);
  EXPECT_FALSE(HexDecode("0"));
  EXPECT_FALSE(HexDecode("zz"));
}

TEST(CryptoTest, TestMacSignerIsDeterministic) {
  TestMacSigner signer(Bytes{1, 2, 3});
  Bytes msg = {9, 9, 9};
  EXPECT_EQ(signer.Sign(msg), signer.Sign(msg));
  EXPECT_EQ(signer.Sign(msg).size(), 32u);
  EXPECT_TRUE(VerifySignature(SignatureScheme::kTestMac, signer.public_key(),
                              msg, signer.Sign(msg)));
  msg[0] ^= 1;
  EXPECT_FALSE(VerifySignature(SignatureScheme::kTestMac, signer.public_key(),
                               msg, signer.Sign(Bytes{9, 9, 9})));
}

TEST(CryptoTest, Ed25519Rfc8032Vector) {
  // RFC 8032 section 7.1, TEST 1 (empty message).
  auto seed = *HexDecode(
      "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60");
  Ed25519Signer signer(seed);
  EXPECT_EQ(HexEncode(signer.public_key()),
            "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a");
  Bytes sig = signer.Sign({});
  EXPECT_EQ(HexEncode(sig),
            "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e06522490155"
            "5fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b");
  EXPECT_TRUE(VerifySignature(SignatureScheme::kEd25519, signer.public_key(),
                              {}, sig));
  sig[10] ^= 0x40;
  EXPECT_FALSE(VerifySignature(SignatureScheme::kEd25519, signer.public_key(),
                               {}, sig));
}

TEST(CryptoTest, VerifyRejectsWrongKeyShapes) {
  EXPECT_FALSE(VerifySignature(SignatureScheme::kEd25519, Bytes(31), {}, Bytes(64)));
  EXPECT_FALSE(VerifySignature(SignatureScheme::kTestMac, {}, {}, Bytes(32)));
}

}  // namespace
}  // namespace ctga
