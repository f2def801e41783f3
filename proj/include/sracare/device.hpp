// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

// Simulated prover hardware: writable flash, read-only secure ROM and a
// PMP-style write-lock table.

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "sracare/bytes.hpp"
#include "sracare/crypto.hpp"
#include "sracare/frame.hpp"

namespace sracare {

inline constexpr std::size_t kDefaultFlashCapacity = 64 * 1024;
inline constexpr Byte kErasedByte = 0xFF;

struct ChipInfo {
  static constexpr std::size_t kSerializedSize = 36;

  std::array<Byte, 16> uuid{};
  std::array<Byte, 4> vendor_id{};
  std::array<Byte, 8> serial{};
  std::array<Byte, 4> firmware_version{};
  std::array<Byte, 4> board_version{};

  // uuid goes first so the hashed 16-byte prefix is the device-unique part.
  Bytes serialize() const {
    Bytes out;
    out.reserve(kSerializedSize);
    append(out, uuid);
    append(out, vendor_id);
    append(out, serial);
    append(out, firmware_version);
    append(out, board_version);
    return out;
  }

  static ChipInfo parse(ByteView in) {
    if (in.size() != kSerializedSize) {
      throw Error(ErrorCode::MalformedChipInfo,
                  "chip info must be 36 bytes, got " + std::to_string(in.size()));
    }
    ChipInfo ci;
    auto it = in.begin();
    auto take = [&it](auto& field) {
      std::copy_n(it, field.size(), field.begin());
      it += static_cast<std::ptrdiff_t>(field.size());
    };
    take(ci.uuid);
    take(ci.vendor_id);
    take(ci.serial);
    take(ci.firmware_version);
    take(ci.board_version);
    return ci;
  }

  friend bool operator==(const ChipInfo&, const ChipInfo&) = default;
};

/// Immutable after construction. The golden frames are checked against the
/// key here, so a SecureRom value always holds a verifiable image.
class SecureRom {
 public:
  SecureRom(ChipInfo chip_info, SecretKey key, std::vector<Frame> golden_frames)
      : chip_info_(chip_info), key_(std::move(key)), golden_(std::move(golden_frames)) {
    for (std::size_t i = 0; i < golden_.size(); ++i) {
      if (!verify_frame(golden_[i], key_, static_cast<std::uint32_t>(i))) {
        throw Error(ErrorCode::BadGoldenImage, "golden frame " + std::to_string(i) + " does not verify");
      }
    }
  }

  static SecureRom from_image(ChipInfo chip_info, const SecretKey& key, ByteView image) {
    return SecureRom(chip_info, key, pack_image(image, key));
  }

  const ChipInfo& chip_info() const { return chip_info_; }
  const SecretKey& key() const { return key_; }
  std::size_t frame_count() const { return golden_.size(); }
  const std::vector<Frame>& golden_frames() const { return golden_; }

  // Container: "SRRM" | version u16 | chip_info (36) | key_len u16 | key |
  //            frame_count u32 | frames (1024 each).
  static constexpr std::array<Byte, 4> kMagic = {'S', 'R', 'R', 'M'};
  static constexpr std::uint16_t kVersion = 1;

  Bytes serialize() const {
    Bytes out(kMagic.begin(), kMagic.end());
    put_u16(out, kVersion);
    append(out, chip_info_.serialize());
    put_u16(out, static_cast<std::uint16_t>(key_.size()));
    append(out, key_.expose());
    put_u32(out, static_cast<std::uint32_t>(golden_.size()));
    append(out, serialize_frame_stream(golden_));
    return out;
  }

  static SecureRom parse(ByteView in) {
    auto need = [&in](std::size_t end) {
      if (in.size() < end) throw Error(ErrorCode::BadRomImage, "ROM container truncated");
    };
    need(6);
    if (!std::equal(kMagic.begin(), kMagic.end(), in.begin())) {
      throw Error(ErrorCode::BadRomImage, "bad magic");
    }
    if (get_u16(in, 4) != kVersion) throw Error(ErrorCode::BadRomImage, "unsupported version");
    std::size_t at = 6;
    need(at + ChipInfo::kSerializedSize + 2);
    ChipInfo ci = ChipInfo::parse(in.subspan(at, ChipInfo::kSerializedSize));
    at += ChipInfo::kSerializedSize;
    const std::size_t key_len = get_u16(in, at);
    at += 2;
    need(at + key_len + 4);
    SecretKey key(in.subspan(at, key_len));
    at += key_len;
    const std::size_t count = get_u32(in, at);
    at += 4;
    if (in.size() - at != count * kFrameSize) {
      throw Error(ErrorCode::BadRomImage, "frame section length does not match frame_count");
    }
    return SecureRom(ci, std::move(key), deserialize_frame_stream(in.subspan(at)));
  }

 private:
  ChipInfo chip_info_;
  SecretKey key_;
  std::vector<Frame> golden_;
};

struct PmpRegion {
  std::size_t start = 0;
  std::size_t length = 0;
  bool write_locked = true;

  std::size_t end() const { return start + length; }
  friend bool operator==(const PmpRegion&, const PmpRegion&) = default;
};

/// Sorted, non-overlapping write-locked regions. Only grows until power cycle.
class PmpLockSet {
 public:
  void lock(std::size_t start, std::size_t length) {
    if (length == 0) return;
    PmpRegion merged{start, length, true};
    std::vector<PmpRegion> kept;
    for (const PmpRegion& r : regions_) {
      if (r.end() < merged.start || merged.end() < r.start) {
        kept.push_back(r);
      } else {
        const std::size_t lo = std::min(r.start, merged.start);
        const std::size_t hi = std::max(r.end(), merged.end());
        merged = {lo, hi - lo, true};
      }
    }
    kept.push_back(merged);
    std::sort(kept.begin(), kept.end(),
              [](const PmpRegion& a, const PmpRegion& b) { return a.start < b.start; });
    regions_ = std::move(kept);
  }

  bool overlaps_locked(std::size_t start, std::size_t length) const {
    if (length == 0) return false;
    return std::any_of(regions_.begin(), regions_.end(), [&](const PmpRegion& r) {
      return r.write_locked && start < r.end() && r.start < start + length;
    });
  }

  const std::vector<PmpRegion>& regions() const { return regions_; }

 private:
  std::vector<PmpRegion> regions_;
};

struct AccessEvent {
  enum class Kind { FlashRead, FlashWrite, FlashErase, PmpLock, RomRead };
  Kind kind;
  std::size_t addr = 0;  // frame index for RomRead
  std::size_t length = 0;
};

class DeviceState {
 public:
  using AccessObserver = std::function<void(const AccessEvent&)>;

  explicit DeviceState(SecureRom rom, std::size_t flash_capacity = kDefaultFlashCapacity)
      : rom_(std::move(rom)), flash_(flash_capacity, kErasedByte) {}

  /// A device whose flash holds the ROM's golden frames from address 0.
  static DeviceState provision(SecureRom rom, std::size_t flash_capacity = kDefaultFlashCapacity) {
    DeviceState dev(std::move(rom), flash_capacity);
    const Bytes image = serialize_frame_stream(dev.rom_.golden_frames());
    if (image.size() > flash_capacity) {
      throw Error(ErrorCode::OutOfBounds, "golden image does not fit in flash");
    }
    std::copy(image.begin(), image.end(), dev.flash_.begin());
    return dev;
  }

  /// Same ROM and flash contents, PMP locks cleared. Cycle count carries over.
  DeviceState power_cycle() const {
    DeviceState next(rom_, flash_.size());
    next.flash_ = flash_;
    next.cycle_counter_ = cycle_counter_;
    next.observer_ = observer_;
    return next;
  }

  std::size_t flash_capacity() const { return flash_.size(); }

  Bytes flash_read(std::size_t addr, std::size_t len) const {
    check_bounds(addr, len);
    notify({AccessEvent::Kind::FlashRead, addr, len});
    auto first = flash_.begin() + static_cast<std::ptrdiff_t>(addr);
    return Bytes(first, first + static_cast<std::ptrdiff_t>(len));
  }

  void flash_write(std::size_t addr, ByteView data) {
    check_bounds(addr, data.size());
    check_unlocked(addr, data.size());
    notify({AccessEvent::Kind::FlashWrite, addr, data.size()});
    std::copy(data.begin(), data.end(), flash_.begin() + static_cast<std::ptrdiff_t>(addr));
  }

  void flash_erase_region(std::size_t start, std::size_t len) {
    check_bounds(start, len);
    check_unlocked(start, len);
    if (len == 0) return;
    notify({AccessEvent::Kind::FlashErase, start, len});
    std::fill_n(flash_.begin() + static_cast<std::ptrdiff_t>(start), len, kErasedByte);
  }

  void pmp_lock(std::size_t start, std::size_t len) {
    check_bounds(start, len);
    notify({AccessEvent::Kind::PmpLock, start, len});
    pmp_.lock(start, len);
  }

  bool is_write_locked(std::size_t start, std::size_t len) const {
    return pmp_.overlaps_locked(start, len);
  }

  Bytes rom_chip_info_bytes() const { return rom_.chip_info().serialize(); }

  const Frame& rom_golden_frame(std::size_t index) const {
    if (index >= rom_.frame_count()) {
      throw Error(ErrorCode::NoSuchFrame, "golden frame " + std::to_string(index) + " of " +
                                              std::to_string(rom_.frame_count()));
    }
    notify({AccessEvent::Kind::RomRead, index, kFrameSize});
    return rom_.golden_frames()[index];
  }

  const SecureRom& rom() const { return rom_; }
  const PmpLockSet& pmp() const { return pmp_; }
  ByteView flash() const { return flash_; }

  std::uint64_t cycle_counter() const { return cycle_counter_; }
  void add_cycles(std::uint64_t cycles) { cycle_counter_ += cycles; }

  void set_access_observer(AccessObserver observer) { observer_ = std::move(observer); }

 private:
  void check_bounds(std::size_t addr, std::size_t len) const {
    if (addr > flash_.size() || len > flash_.size() - addr) {
      throw Error(ErrorCode::OutOfBounds, "[" + std::to_string(addr) + ", +" + std::to_string(len) +
                                              ") exceeds flash capacity " +
                                              std::to_string(flash_.size()));
    }
  }

  void check_unlocked(std::size_t addr, std::size_t len) const {
    if (pmp_.overlaps_locked(addr, len)) {
      throw Error(ErrorCode::RegionLocked,
                  "[" + std::to_string(addr) + ", +" + std::to_string(len) + ") is write-locked");
    }
  }

  void notify(const AccessEvent& event) const {
    if (observer_) observer_(event);
  }

  SecureRom rom_;
  Bytes flash_;
  PmpLockSet pmp_;
  std::uint64_t cycle_counter_ = 0;
  AccessObserver observer_;
};

}  // namespace sracare
