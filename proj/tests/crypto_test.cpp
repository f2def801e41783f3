// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <string>

#include "sracare/crypto.hpp"
#include "test_support.hpp"

namespace sracare {
namespace {

using testing::oracle_hmac;
using testing::oracle_sha256;
using testing::random_bytes;

TEST(Sha256Test, EmptyInput) {
  EXPECT_EQ(to_hex(sha256({}).view()),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Sha256Test, Abc) {
  EXPECT_EQ(to_hex(sha256(to_bytes("abc")).view()),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Sha256Test, Deterministic) {
  const Bytes data = to_bytes("the same bytes twice");
  EXPECT_EQ(sha256(data), sha256(data));
}

// Lengths around the 55/56/64-byte padding boundaries are where hand-rolled
// implementations usually break.
TEST(Sha256Test, MatchesOracleAcrossLengths) {
  std::mt19937_64 rng(7);
  for (std::size_t len = 0; len <= 300; ++len) {
    const Bytes data = random_bytes(rng, len);
    ASSERT_EQ(sha256(data).bytes, oracle_sha256(data)) << "len=" << len;
  }
}

TEST(Sha256Test, IncrementalUpdatesMatchOneShot) {
  std::mt19937_64 rng(11);
  const Bytes data = random_bytes(rng, 1000);
  Sha256 h;
  for (std::size_t at = 0; at < data.size(); at += 37) {
    h.update(ByteView(data).subspan(at, std::min<std::size_t>(37, data.size() - at)));
  }
  EXPECT_EQ(h.finish(), sha256(data));
}

TEST(DeriveKPrimeTest, BlockSizedKeyUnchanged) {
  const Bytes raw(64, 0xAA);
  const BlockKey k = derive_k_prime(SecretKey(raw));
  EXPECT_TRUE(std::equal(k.begin(), k.end(), raw.begin()));
}

TEST(DeriveKPrimeTest, ShortKeyZeroPadded) {
  const Bytes raw = {1, 2, 3, 4, 5, 6, 7, 8};
  const BlockKey k = derive_k_prime(SecretKey(raw));
  EXPECT_TRUE(std::equal(raw.begin(), raw.end(), k.begin()));
  for (std::size_t i = 8; i < 64; ++i) EXPECT_EQ(k[i], 0) << i;
}

TEST(DeriveKPrimeTest, LongKeyHashedThenPadded) {
  const Bytes raw(100, 0xAA);
  const BlockKey k = derive_k_prime(SecretKey(raw));
  EXPECT_EQ(to_hex(ByteView(k).first(32)),
            "a2d9e521de7743fc225b901446065f62559c93924d807ae82ad8c534b7e2956e");
  for (std::size_t i = 32; i < 64; ++i) EXPECT_EQ(k[i], 0) << i;
}

TEST(SecretKeyTest, RejectsEmptyAndOversized) {
  EXPECT_THROW(SecretKey(Bytes{}), Error);
  EXPECT_THROW(SecretKey(Bytes(257, 1)), Error);
  EXPECT_NO_THROW(SecretKey(Bytes(256, 1)));
}

struct Rfc4231Case {
  Bytes key;
  Bytes data;
  std::string mac_hex;
  std::size_t compare_bytes = 32;
};

std::vector<Rfc4231Case> rfc4231_cases() {
  Bytes key4;
  for (int i = 1; i <= 25; ++i) key4.push_back(static_cast<Byte>(i));
  return {
      {Bytes(20, 0x0b), to_bytes("Hi There"),
       "b0344c61d8db38535ca8afceaf0bf12b881dc200c9833da726e9376c2e32cff7"},
      {to_bytes("Jefe"), to_bytes("what do ya want for nothing?"),
       "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"},
      {Bytes(20, 0xaa), Bytes(50, 0xdd),
       "773ea91e36800e46854db8ebd09181a72959098b3ef8c122d9635514ced565fe"},
      {key4, Bytes(50, 0xcd), "82558a389a443c0ea4cc819899f2083a85f0faa3e578f8077a2e3ff46729665b"},
      {Bytes(20, 0x0c), to_bytes("Test With Truncation"), "a3b6167473100ee06e0c796c2955552b", 16},
      {Bytes(131, 0xaa), to_bytes("Test Using Larger Than Block-Size Key - Hash Key First"),
       "60e431591ee0b67f0d8a26aacbf5b77f8e0bc6213728c5140546040f0ee37f54"},
  };
}

TEST(HmacTest, Rfc4231Cases1To6) {
  const auto cases = rfc4231_cases();
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Digest mac = hmac_sha256(SecretKey(cases[i].key), cases[i].data);
    EXPECT_EQ(to_hex(mac.view().first(cases[i].compare_bytes)), cases[i].mac_hex) << "case " << i + 1;
  }
}

TEST(HmacTest, Deterministic) {
  const SecretKey key(to_bytes("Jefe"));
  const Bytes msg = to_bytes("what do ya want for nothing?");
  EXPECT_EQ(hmac_sha256(key, msg), hmac_sha256(key, msg));
}

TEST(HmacTest, MatchesOracleForRandomKeysAndMessages) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const Bytes key = random_bytes(rng, 1 + rng() % 200);
    const Bytes msg = random_bytes(rng, rng() % 300);
    ASSERT_EQ(hmac_sha256(SecretKey(key), msg).bytes, oracle_hmac(key, msg)) << "trial " << trial;
  }
}

TEST(GenerateN2Test, ZeroNonceIsPlainHashOfPrefix) {
  const SecretKey key(to_bytes("Jefe"));
  Bytes ci(36);
  for (std::size_t i = 0; i < ci.size(); ++i) ci[i] = static_cast<Byte>(i * 7);
  const Nonce n2 = generate_n2(key, ci, Nonce{});
  const auto prefix_hash = oracle_sha256(ByteView(ci).first(16));
  EXPECT_EQ(n2.bytes, oracle_hmac(key.expose(), prefix_hash));
}

TEST(GenerateN2Test, ComposedOracleValue) {
  const SecretKey key(to_bytes("Jefe"));
  const Bytes ci(36, 0x00);
  Nonce n1;
  n1.bytes.fill(0x01);
  EXPECT_EQ(to_hex(generate_n2(key, ci, n1).view()),
            "25454784685ecfeb86fe451b9240805540c4faee8b390d4f6502c6a2d97f8bc9");
}

TEST(GenerateN2Test, OnlyFirstSixteenBytesMatter) {
  const SecretKey key(to_bytes("Jefe"));
  Bytes a(36, 0x11);
  Bytes b = a;
  b[16] ^= 0xFF;
  b[35] ^= 0xFF;
  Nonce n1;
  n1.bytes.fill(0x42);
  EXPECT_EQ(generate_n2(key, a, n1), generate_n2(key, b, n1));
  b[15] ^= 0x01;
  EXPECT_NE(generate_n2(key, a, n1), generate_n2(key, b, n1));
}

TEST(GenerateN2Test, ShortChipInfoRejected) {
  const SecretKey key(to_bytes("Jefe"));
  try {
    generate_n2(key, Bytes(15, 0), Nonce{});
    FAIL() << "expected MalformedChipInfo";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedChipInfo);
  }
}

TEST(GenerateN2Test, NoCollisionsAcrossRandomNonces) {
  const SecretKey key(to_bytes("Jefe"));
  const Bytes ci = default_chip_info().serialize();
  std::mt19937_64 rng(2024);
  std::set<Nonce> n1s;
  std::set<Nonce> n2s;
  while (n1s.size() < 10000) {
    Nonce n1 = draw_nonce(rng);
    if (!n1s.insert(n1).second) continue;
    n2s.insert(generate_n2(key, ci, n1));
  }
  EXPECT_EQ(n2s.size(), 10000u);
}

TEST(DeriveK1Test, EqualNoncesCancel) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const Digest mac = Digest::from(random_bytes(rng, 32));
    const Nonce n = Nonce::from(random_bytes(rng, 32));
    const SecretKey k1 = derive_k1(mac, n, n);
    EXPECT_TRUE(std::equal(k1.expose().begin(), k1.expose().end(), mac.bytes.begin()));
  }
}

TEST(DeriveK1Test, DirectXorArithmetic) {
  Digest mac;
  mac.bytes.fill(0xFF);
  Nonce n1;
  n1.bytes.fill(0x0F);
  const SecretKey k1 = derive_k1(mac, n1, Nonce{});
  const Bytes expected(32, 0xF0);
  EXPECT_TRUE(std::equal(expected.begin(), expected.end(), k1.expose().begin()));
}

TEST(DeriveK1Test, MatchesByteLoopOracle) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const Bytes a = random_bytes(rng, 32);
    const Bytes b = random_bytes(rng, 32);
    const Bytes c = random_bytes(rng, 32);
    Bytes expected(32);
    for (std::size_t j = 0; j < 32; ++j) expected[j] = a[j] ^ b[j] ^ c[j];
    const SecretKey k1 = derive_k1(Digest::from(a), Nonce::from(b), Nonce::from(c));
    EXPECT_TRUE(std::equal(expected.begin(), expected.end(), k1.expose().begin()));
  }
}

}  // namespace
}  // namespace sracare
