// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sracare {

using Byte = std::uint8_t;
using Bytes = std::vector<Byte>;
using ByteView = std::span<const Byte>;

/// Every failure the library reports. One enum shared across modules so the
/// CLI and the attack harness can branch on a single code.
enum class ErrorCode {
  MalformedChipInfo,
  InvalidKey,
  OutOfBounds,
  RegionLocked,
  NoSuchFrame,
  BadGoldenImage,
  BadRomImage,
  EmptyImage,
  WrongLength,
  BadVersion,
  NonzeroReserved,
  BadPayloadLength,
  InvalidState,
  MissingAttestParams,
  InvalidAttestParams,
  UnknownType,
  LengthMismatch,
  TruncatedBody,
  MalformedBody,
  ConfigError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedChipInfo: return "MalformedChipInfo";
    case ErrorCode::InvalidKey: return "InvalidKey";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::RegionLocked: return "RegionLocked";
    case ErrorCode::NoSuchFrame: return "NoSuchFrame";
    case ErrorCode::BadGoldenImage: return "BadGoldenImage";
    case ErrorCode::BadRomImage: return "BadRomImage";
    case ErrorCode::EmptyImage: return "EmptyImage";
    case ErrorCode::WrongLength: return "WrongLength";
    case ErrorCode::BadVersion: return "BadVersion";
    case ErrorCode::NonzeroReserved: return "NonzeroReserved";
    case ErrorCode::BadPayloadLength: return "BadPayloadLength";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::MissingAttestParams: return "MissingAttestParams";
    case ErrorCode::InvalidAttestParams: return "InvalidAttestParams";
    case ErrorCode::UnknownType: return "UnknownType";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TruncatedBody: return "TruncatedBody";
    case ErrorCode::MalformedBody: return "MalformedBody";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Fixed 32-byte value. The tag keeps digests and nonces from being mixed up
/// at call sites even though they share a representation.
template <typename Tag>
struct Block32 {
  static constexpr std::size_t kSize = 32;
  std::array<Byte, kSize> bytes{};

  static Block32 from(ByteView in) {
    if (in.size() != kSize) {
      throw Error(ErrorCode::WrongLength, "expected 32 bytes, got " + std::to_string(in.size()));
    }
    Block32 out;
    std::copy(in.begin(), in.end(), out.bytes.begin());
    return out;
  }

  ByteView view() const { return {bytes.data(), bytes.size()}; }

  friend bool operator==(const Block32&, const Block32&) = default;
  friend auto operator<=>(const Block32&, const Block32&) = default;
};

// Little-endian field helpers used by every wire and file format here.
inline void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<Byte>(v));
  out.push_back(static_cast<Byte>(v >> 8));
}

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<Byte>(v >> (8 * i)));
}

inline std::uint16_t get_u16(ByteView in, std::size_t at) {
  return static_cast<std::uint16_t>(in[at] | (in[at + 1] << 8));
}

inline std::uint32_t get_u32(ByteView in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | in[at + static_cast<std::size_t>(i)];
  return v;
}

inline void append(Bytes& out, ByteView in) { out.insert(out.end(), in.begin(), in.end()); }

inline std::string to_hex(ByteView in) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(in.size() * 2);
  for (Byte b : in) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 0xF]);
  }
  return s;
}

inline Bytes from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw Error(ErrorCode::ConfigError, "odd-length hex string");
  Bytes out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::ConfigError, "invalid hex digit");
    out.push_back(static_cast<Byte>((hi << 4) | lo));
  }
  return out;
}

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

/// Equality over equal-length buffers without early exit.
inline bool constant_time_equal(ByteView a, ByteView b) {
  if (a.size() != b.size()) return false;
  Byte acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc |= static_cast<Byte>(a[i] ^ b[i]);
  return acc == 0;
}

}  // namespace sracare
