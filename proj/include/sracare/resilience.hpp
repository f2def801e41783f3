// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "sracare/device.hpp"
#include "sracare/frame.hpp"

namespace sracare {

struct RecoveryOutcome {
  bool reflashed = false;
  bool locked = false;
};

inline std::size_t frame_flash_address(std::size_t frame_index) { return frame_index * kFrameSize; }

/// Reflash one frame region from the ROM golden image, then write-lock it.
/// The corrupted flash content is never read; the only flash read is the
/// post-write check of the freshly written frame.
inline RecoveryOutcome recover(DeviceState& dev, std::size_t frame_index, const SecretKey& key) {
  const Frame& golden = dev.rom_golden_frame(frame_index);
  const std::size_t addr = frame_flash_address(frame_index);
  if (dev.is_write_locked(addr, kFrameSize)) {
    throw Error(ErrorCode::RegionLocked,
                "frame " + std::to_string(frame_index) + " region already locked");
  }

  RecoveryOutcome outcome;
  dev.flash_erase_region(addr, kFrameSize);
  dev.flash_write(addr, serialize_frame(golden));

  const Bytes written = dev.flash_read(addr, kFrameSize);
  outcome.reflashed =
      verify_frame(deserialize_frame(written), key, static_cast<std::uint32_t>(frame_index));

  dev.pmp_lock(addr, kFrameSize);
  outcome.locked = dev.is_write_locked(addr, kFrameSize);
  return outcome;
}

}  // namespace sracare
