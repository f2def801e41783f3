// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

// 1 KB integrity-protected firmware frames.
//
// Serialized layout (little-endian integers):
//
//   offset  size  field
//        0    32  digest          HMAC-SHA256 over the frame with this field zeroed
//       32     4  frame_number
//       36     4  flash_offset    frame_number * 968, byte address in the image
//       40     2  payload_len     valid payload bytes, <= 968
//       42     2  header_version  always 1
//       44    12  reserved        zero
//       56   968  payload         zero-padded past payload_len

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sracare/bytes.hpp"
#include "sracare/crypto.hpp"

namespace sracare {

inline constexpr std::size_t kFrameSize = 1024;
inline constexpr std::size_t kFrameHeaderSize = 56;
inline constexpr std::size_t kFramePayloadSize = kFrameSize - kFrameHeaderSize;
inline constexpr std::uint16_t kFrameHeaderVersion = 1;
inline constexpr std::size_t kFrameReservedSize = 12;

static_assert(kFramePayloadSize == 968);

struct FrameHeader {
  Digest digest;
  std::uint32_t frame_number = 0;
  std::uint32_t flash_offset = 0;
  std::uint16_t payload_len = 0;
  std::uint16_t header_version = kFrameHeaderVersion;
  std::array<Byte, kFrameReservedSize> reserved{};

  friend bool operator==(const FrameHeader&, const FrameHeader&) = default;
};

struct Frame {
  FrameHeader header;
  std::array<Byte, kFramePayloadSize> payload{};

  ByteView valid_payload() const { return ByteView(payload).first(header.payload_len); }

  friend bool operator==(const Frame&, const Frame&) = default;
};

inline Bytes serialize_frame(const Frame& f) {
  Bytes out;
  out.reserve(kFrameSize);
  append(out, f.header.digest.view());
  put_u32(out, f.header.frame_number);
  put_u32(out, f.header.flash_offset);
  put_u16(out, f.header.payload_len);
  put_u16(out, f.header.header_version);
  append(out, f.header.reserved);
  append(out, f.payload);
  return out;
}

inline Frame deserialize_frame(ByteView in) {
  if (in.size() != kFrameSize) {
    throw Error(ErrorCode::WrongLength, "frame must be 1024 bytes, got " + std::to_string(in.size()));
  }
  Frame f;
  f.header.digest = Digest::from(in.first(32));
  f.header.frame_number = get_u32(in, 32);
  f.header.flash_offset = get_u32(in, 36);
  f.header.payload_len = get_u16(in, 40);
  f.header.header_version = get_u16(in, 42);
  if (f.header.header_version != kFrameHeaderVersion) {
    throw Error(ErrorCode::BadVersion, "header_version " + std::to_string(f.header.header_version));
  }
  std::copy_n(in.begin() + 44, kFrameReservedSize, f.header.reserved.begin());
  for (Byte b : f.header.reserved) {
    if (b != 0) throw Error(ErrorCode::NonzeroReserved, "reserved header bytes must be zero");
  }
  if (f.header.payload_len > kFramePayloadSize) {
    throw Error(ErrorCode::BadPayloadLength, "payload_len " + std::to_string(f.header.payload_len));
  }
  std::copy_n(in.begin() + kFrameHeaderSize, kFramePayloadSize, f.payload.begin());
  return f;
}

/// Keyed digest over the serialized frame with the digest field zeroed.
inline Digest compute_frame_digest(const Frame& f, const SecretKey& key) {
  Frame unsigned_frame = f;
  unsigned_frame.header.digest = Digest{};
  return hmac_sha256(key, serialize_frame(unsigned_frame));
}

inline std::vector<Frame> pack_image(ByteView image, const SecretKey& key) {
  if (image.empty()) throw Error(ErrorCode::EmptyImage, "cannot pack an empty image");
  std::vector<Frame> frames;
  frames.reserve((image.size() + kFramePayloadSize - 1) / kFramePayloadSize);
  for (std::size_t offset = 0; offset < image.size(); offset += kFramePayloadSize) {
    const std::size_t len = std::min(kFramePayloadSize, image.size() - offset);
    Frame f;
    f.header.frame_number = static_cast<std::uint32_t>(frames.size());
    f.header.flash_offset = static_cast<std::uint32_t>(offset);
    f.header.payload_len = static_cast<std::uint16_t>(len);
    std::copy_n(image.begin() + static_cast<std::ptrdiff_t>(offset), len, f.payload.begin());
    f.header.digest = compute_frame_digest(f, key);
    frames.push_back(f);
  }
  return frames;
}

/// The per-frame verdict V_i: position checks plus a constant-time digest compare.
inline bool verify_frame(const Frame& f, const SecretKey& key, std::uint32_t expected_number) {
  bool ok = f.header.frame_number == expected_number;
  ok &= static_cast<std::uint64_t>(f.header.flash_offset) ==
        static_cast<std::uint64_t>(f.header.frame_number) * kFramePayloadSize;
  ok &= f.header.payload_len <= kFramePayloadSize;
  const Digest expected = compute_frame_digest(f, key);
  ok &= constant_time_equal(expected.view(), f.header.digest.view());
  return ok;
}

inline Bytes unpack_image(const std::vector<Frame>& frames) {
  Bytes image;
  for (const Frame& f : frames) append(image, f.valid_payload());
  return image;
}

/// Frame stream file: concatenated serialized frames, no container header.
inline Bytes serialize_frame_stream(const std::vector<Frame>& frames) {
  Bytes out;
  out.reserve(frames.size() * kFrameSize);
  for (const Frame& f : frames) append(out, serialize_frame(f));
  return out;
}

inline std::vector<Frame> deserialize_frame_stream(ByteView in) {
  if (in.size() % kFrameSize != 0) {
    throw Error(ErrorCode::WrongLength, "frame stream length is not a multiple of 1024");
  }
  std::vector<Frame> frames;
  for (std::size_t at = 0; at < in.size(); at += kFrameSize) {
    frames.push_back(deserialize_frame(in.subspan(at, kFrameSize)));
  }
  return frames;
}

}  // namespace sracare
