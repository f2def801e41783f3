// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

// Frame-by-frame bootstrap with a chain of trust anchored in ROM.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sracare/device.hpp"
#include "sracare/frame.hpp"
#include "sracare/resilience.hpp"
#include "sracare/timing.hpp"

namespace sracare {

struct FrameVerdict {
  std::size_t index = 0;
  bool passed = false;     // verdict on the flash content as found
  bool recovered = false;  // reflashed from ROM and re-verified

  bool final_pass() const { return passed || recovered; }
  friend bool operator==(const FrameVerdict&, const FrameVerdict&) = default;
};

struct BootEvent {
  enum class Kind { Examine, Verdict, Recover, Reflash };
  Kind kind;
  std::size_t frame = 0;
  bool ok = false;
};

struct BootResult {
  bool integrity = false;
  std::vector<FrameVerdict> verdicts;
  Cycles cycles = 0;
  std::size_t recovered_count = 0;
  std::vector<BootEvent> events;
};

/// I_0 = true, I_{i+1} = I_i && V_i. Returns I_n.
inline bool chain_of_trust(std::span<const bool> verdicts) {
  bool trusted = true;
  for (bool v : verdicts) trusted = trusted && v;
  return trusted;
}

inline bool chain_of_trust(const std::vector<bool>& verdicts) {
  bool trusted = true;
  for (bool v : verdicts) trusted = trusted && v;
  return trusted;
}

namespace detail {

inline bool check_flash_frame(const DeviceState& dev, const SecretKey& key, std::size_t index) {
  const Bytes raw = dev.flash_read(frame_flash_address(index), kFrameSize);
  try {
    return verify_frame(deserialize_frame(raw), key, static_cast<std::uint32_t>(index));
  } catch (const Error&) {
    // A structurally broken frame is just a failed verdict.
    return false;
  }
}

}  // namespace detail

/// Verifies flash frames strictly in order. Frame i+1 is never read before
/// frame i has a final verdict. Without resilience the boot halts on the
/// first failed frame.
inline BootResult bootstrap(DeviceState& dev, const SecretKey& key, const CycleCosts& costs,
                            bool resilience_enabled) {
  BootResult result;
  const std::size_t n = dev.rom().frame_count();
  if (frame_flash_address(n) > dev.flash_capacity()) {
    throw Error(ErrorCode::OutOfBounds, "image of " + std::to_string(n) + " frames exceeds flash");
  }

  std::vector<bool> final_verdicts;
  for (std::size_t i = 0; i < n; ++i) {
    result.events.push_back({BootEvent::Kind::Examine, i, false});
    FrameVerdict verdict{i, detail::check_flash_frame(dev, key, i), false};
    result.events.push_back({BootEvent::Kind::Verdict, i, verdict.passed});
    result.cycles += i == 0 ? costs.first_frame_with : costs.per_frame_with;

    if (!verdict.passed && resilience_enabled) {
      try {
        const RecoveryOutcome outcome = recover(dev, i, key);
        verdict.recovered = outcome.reflashed && detail::check_flash_frame(dev, key, i);
      } catch (const Error&) {
        verdict.recovered = false;
      }
      result.events.push_back({BootEvent::Kind::Recover, i, verdict.recovered});
      result.cycles += costs.per_recovery;
      if (verdict.recovered) ++result.recovered_count;
    } else if (verdict.passed && i == 0 && !dev.is_write_locked(0, kFrameSize)) {
      // The first frame's region is cleared and rewritten with trusted code.
      dev.flash_erase_region(0, kFrameSize);
      dev.flash_write(0, serialize_frame(dev.rom_golden_frame(0)));
      result.events.push_back({BootEvent::Kind::Reflash, 0, true});
    }

    result.verdicts.push_back(verdict);
    final_verdicts.push_back(verdict.final_pass());
    if (!verdict.final_pass()) break;
  }

  result.integrity = chain_of_trust(final_verdicts);
  dev.add_cycles(result.cycles);
  return result;
}

}  // namespace sracare
