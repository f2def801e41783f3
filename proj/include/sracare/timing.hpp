// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace sracare {

using Cycles = std::uint64_t;

/// Bootstrap cost parameters, "without" and "with" the secure boot path.
struct CycleCosts {
  Cycles first_frame_without = 0;
  Cycles first_frame_with = 0;
  Cycles per_frame_without = 0;
  Cycles per_frame_with = 0;
  double frequency_hz = 0.0;
  // Extra cost charged per frame reflashed by the resilience engine. Not part
  // of the bootstrap table, so it defaults to zero.
  Cycles per_recovery = 0;

  /// FPGA bootstrap measurements at 100 MHz. The per-frame values are the
  /// five-frame aggregates 103330 and 133790 divided by 5 (both exact).
  static constexpr CycleCosts paper() {
    return CycleCosts{553611, 576083, 20666, 26758, 100e6, 0};
  }

  bool valid() const {
    return first_frame_without > 0 && per_frame_without > 0 && frequency_hz > 0.0 &&
           first_frame_with >= first_frame_without && per_frame_with >= per_frame_without;
  }

  friend bool operator==(const CycleCosts&, const CycleCosts&) = default;
};

/// One HMAC-SHA256 over a 256-byte block on the FPGA soft core.
struct HmacCoreCycles {
  static constexpr Cycles kSoftware = 47033;
  static constexpr Cycles kHardware = 2926;
};

struct TimingReport {
  unsigned n_frames = 0;
  Cycles total_cycles_without = 0;
  Cycles total_cycles_with = 0;
  Cycles t_delta_cycles = 0;
  double time_without_seconds = 0.0;
  double time_with_seconds = 0.0;
  double d_delta_seconds = 0.0;
  double overhead_fraction = 0.0;
};

inline Cycles total_cycles(const CycleCosts& costs, unsigned n_frames, bool secure) {
  if (n_frames == 0) return 0;
  const Cycles first = secure ? costs.first_frame_with : costs.first_frame_without;
  const Cycles rest = secure ? costs.per_frame_with : costs.per_frame_without;
  return first + Cycles{n_frames - 1} * rest;
}

/// Boot-time increase: first-frame delta plus one per-frame delta for each
/// remaining frame.
inline Cycles t_delta(const CycleCosts& costs, unsigned n_frames) {
  if (n_frames == 0) return 0;
  return (costs.first_frame_with - costs.first_frame_without) +
         Cycles{n_frames - 1} * (costs.per_frame_with - costs.per_frame_without);
}

inline TimingReport report(const CycleCosts& costs, unsigned n_frames) {
  TimingReport r;
  r.n_frames = n_frames;
  r.total_cycles_without = total_cycles(costs, n_frames, false);
  r.total_cycles_with = total_cycles(costs, n_frames, true);
  r.t_delta_cycles = t_delta(costs, n_frames);
  r.time_without_seconds = static_cast<double>(r.total_cycles_without) / costs.frequency_hz;
  r.time_with_seconds = static_cast<double>(r.total_cycles_with) / costs.frequency_hz;
  r.d_delta_seconds = static_cast<double>(r.t_delta_cycles) / costs.frequency_hz;
  r.overhead_fraction = r.total_cycles_without == 0
                            ? 0.0
                            : static_cast<double>(r.total_cycles_with) /
                                      static_cast<double>(r.total_cycles_without) -
                                  1.0;
  return r;
}

}  // namespace sracare
