// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

// SHA-256, HMAC-SHA256 and the session key / nonce algebra shared by the
// verifier and the prover.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <string>

#include "sracare/bytes.hpp"

namespace sracare {

struct DigestTag {};
struct NonceTag {};
using Digest = Block32<DigestTag>;
using Nonce = Block32<NonceTag>;

/// Symmetric key material. Deliberately has no stream operator or string
/// conversion; the only way to get at the bytes is `expose()`.
class SecretKey {
 public:
  static constexpr std::size_t kMaxSize = 256;

  explicit SecretKey(ByteView bytes) : bytes_(bytes.begin(), bytes.end()) {
    if (bytes_.empty() || bytes_.size() > kMaxSize) {
      throw Error(ErrorCode::InvalidKey, "key length must be 1..256 bytes");
    }
  }

  std::size_t size() const { return bytes_.size(); }
  ByteView expose() const { return bytes_; }

  friend bool operator==(const SecretKey& a, const SecretKey& b) {
    return constant_time_equal(a.bytes_, b.bytes_);
  }

 private:
  Bytes bytes_;
};

/// Incremental FIPS 180-4 SHA-256.
class Sha256 {
 public:
  static constexpr std::size_t kBlockSize = 64;

  Sha256& update(ByteView data) {
    for (Byte b : data) {
      buffer_[buffered_++] = b;
      if (buffered_ == kBlockSize) {
        compress();
        buffered_ = 0;
      }
    }
    total_bits_ += static_cast<std::uint64_t>(data.size()) * 8;
    return *this;
  }

  Digest finish() {
    const std::uint64_t bits = total_bits_;
    buffer_[buffered_++] = 0x80;
    if (buffered_ > kBlockSize - 8) {
      while (buffered_ < kBlockSize) buffer_[buffered_++] = 0;
      compress();
      buffered_ = 0;
    }
    while (buffered_ < kBlockSize - 8) buffer_[buffered_++] = 0;
    for (int i = 7; i >= 0; --i) buffer_[buffered_++] = static_cast<Byte>(bits >> (8 * i));
    compress();

    Digest out;
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        out.bytes[4 * i + j] = static_cast<Byte>(state_[i] >> (24 - 8 * j));
      }
    }
    return out;
  }

 private:
  static constexpr std::array<std::uint32_t, 64> kRound = {
      0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
      0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
      0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
      0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
      0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
      0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
      0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
      0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
      0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
      0xc67178f2};

  void compress() {
    std::array<std::uint32_t, 64> w{};
    for (std::size_t i = 0; i < 16; ++i) {
      w[i] = (std::uint32_t{buffer_[4 * i]} << 24) | (std::uint32_t{buffer_[4 * i + 1]} << 16) |
             (std::uint32_t{buffer_[4 * i + 2]} << 8) | std::uint32_t{buffer_[4 * i + 3]};
    }
    for (std::size_t i = 16; i < 64; ++i) {
      const std::uint32_t s0 = std::rotr(w[i - 15], 7) ^ std::rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
      const std::uint32_t s1 = std::rotr(w[i - 2], 17) ^ std::rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
      w[i] = w[i - 16] + s0 + w[i - 7] + s1;
    }

    auto [a, b, c, d, e, f, g, h] = state_;
    for (std::size_t i = 0; i < 64; ++i) {
      const std::uint32_t s1 = std::rotr(e, 6) ^ std::rotr(e, 11) ^ std::rotr(e, 25);
      const std::uint32_t ch = (e & f) ^ (~e & g);
      const std::uint32_t t1 = h + s1 + ch + kRound[i] + w[i];
      const std::uint32_t s0 = std::rotr(a, 2) ^ std::rotr(a, 13) ^ std::rotr(a, 22);
      const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
      const std::uint32_t t2 = s0 + maj;
      h = g;
      g = f;
      f = e;
      e = d + t1;
      d = c;
      c = b;
      b = a;
      a = t1 + t2;
    }
    state_[0] += a;
    state_[1] += b;
    state_[2] += c;
    state_[3] += d;
    state_[4] += e;
    state_[5] += f;
    state_[6] += g;
    state_[7] += h;
  }

  std::array<std::uint32_t, 8> state_ = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                                         0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
  std::array<Byte, kBlockSize> buffer_{};
  std::size_t buffered_ = 0;
  std::uint64_t total_bits_ = 0;
};

inline Digest sha256(ByteView data) { return Sha256{}.update(data).finish(); }

using BlockKey = std::array<Byte, Sha256::kBlockSize>;

/// K': keys longer than one block are hashed first, then zero-padded.
inline BlockKey derive_k_prime(const SecretKey& key) {
  BlockKey out{};
  ByteView raw = key.expose();
  if (raw.size() > Sha256::kBlockSize) {
    const Digest hashed = sha256(raw);
    std::copy(hashed.bytes.begin(), hashed.bytes.end(), out.begin());
  } else {
    std::copy(raw.begin(), raw.end(), out.begin());
  }
  return out;
}

inline Digest hmac_sha256(const SecretKey& key, ByteView message) {
  constexpr Byte kInnerPad = 0x36;
  constexpr Byte kOuterPad = 0x5C;

  const BlockKey k_prime = derive_k_prime(key);
  BlockKey inner_key{};
  BlockKey outer_key{};
  for (std::size_t i = 0; i < k_prime.size(); ++i) {
    inner_key[i] = k_prime[i] ^ kInnerPad;
    outer_key[i] = k_prime[i] ^ kOuterPad;
  }

  const Digest inner = Sha256{}.update(inner_key).update(message).finish();
  return Sha256{}.update(outer_key).update(inner.view()).finish();
}

/// Number of chip-info bytes hashed into the prover nonce.
inline constexpr std::size_t kChipInfoHashedPrefix = 16;

/// Prover-side nonce without a hardware RNG:
/// n2 = HMAC(K, SHA256(CI[0..16]) xor n1).
inline Nonce generate_n2(const SecretKey& key, ByteView chip_info, const Nonce& n1) {
  if (chip_info.size() < kChipInfoHashedPrefix) {
    throw Error(ErrorCode::MalformedChipInfo,
                "chip info has " + std::to_string(chip_info.size()) + " bytes, need 16");
  }
  Digest mixed = sha256(chip_info.first(kChipInfoHashedPrefix));
  for (std::size_t i = 0; i < mixed.bytes.size(); ++i) mixed.bytes[i] ^= n1.bytes[i];
  return Nonce{hmac_sha256(key, mixed.view()).bytes};
}

/// Session key K1 = HMAC(K, n1) xor n1 xor n2.
inline SecretKey derive_k1(const Digest& mac_k_n1, const Nonce& n1, const Nonce& n2) {
  std::array<Byte, 32> k1{};
  for (std::size_t i = 0; i < k1.size(); ++i) {
    k1[i] = mac_k_n1.bytes[i] ^ n1.bytes[i] ^ n2.bytes[i];
  }
  return SecretKey(k1);
}

}  // namespace sracare
