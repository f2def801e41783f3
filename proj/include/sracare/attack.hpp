// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

// Software-level adversary: corrupts flash (honoring PMP locks), tampers with,
// replays or floods channel traffic, or impersonates with a wrong key. Drives
// end-to-end scenarios and grades the outcome.

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "sracare/device.hpp"
#include "sracare/protocol.hpp"
#include "sracare/secure_boot.hpp"

namespace sracare {

enum class AttackKind {
  None,
  FlashBitFlip,
  FlashOverwrite,
  FrameReorder,
  ChannelTamper,
  ChannelReplay,
  ChannelFlood,
  WrongKey,
};

inline const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::None: return "none";
    case AttackKind::FlashBitFlip: return "flash_bit_flip";
    case AttackKind::FlashOverwrite: return "flash_overwrite";
    case AttackKind::FrameReorder: return "frame_reorder";
    case AttackKind::ChannelTamper: return "channel_tamper";
    case AttackKind::ChannelReplay: return "channel_replay";
    case AttackKind::ChannelFlood: return "channel_flood";
    case AttackKind::WrongKey: return "wrong_key";
  }
  return "?";
}

inline AttackKind parse_attack_kind(std::string_view s) {
  for (AttackKind k : {AttackKind::None, AttackKind::FlashBitFlip, AttackKind::FlashOverwrite,
                       AttackKind::FrameReorder, AttackKind::ChannelTamper, AttackKind::ChannelReplay,
                       AttackKind::ChannelFlood, AttackKind::WrongKey}) {
    if (s == to_string(k)) return k;
  }
  throw Error(ErrorCode::ConfigError, "unknown attack '" + std::string(s) + "'");
}

inline constexpr std::size_t kDefaultFloodCount = 64;

/// Unset targets are drawn from `seed` when the attack runs.
struct AttackSpec {
  AttackKind kind = AttackKind::None;
  std::optional<std::size_t> frame;    // FlashBitFlip, FrameReorder (first frame)
  std::optional<std::size_t> bit;      // payload bit (FlashBitFlip) or message bit (ChannelTamper)
  std::optional<std::size_t> addr;     // FlashOverwrite start address
  std::optional<std::size_t> length;   // FlashOverwrite byte count, 1..64 when drawn
  std::optional<std::size_t> frame_b;  // FrameReorder second frame
  std::optional<std::size_t> message;  // ChannelTamper message index (0 = Challenge)
  std::size_t count = kDefaultFloodCount;  // ChannelFlood copies
  std::uint64_t seed = 0;
};

struct ScenarioReport {
  AttackSpec attack;
  bool attack_blocked = false;  // a flash mutation hit a PMP-locked region
  bool detected = false;
  bool recovered = false;
  bool session_closed = false;
  bool final_integrity = false;
  bool command_sent = false;

  std::string csv() const {
    std::ostringstream os;
    os << to_string(attack.kind) << ',' << attack.seed << ',' << int{detected} << ','
       << int{recovered} << ',' << int{session_closed} << ',' << int{final_integrity};
    return os.str();
  }
  static constexpr std::string_view kCsvHeader =
      "attack,seed,detected,recovered,session_closed,final_integrity";
};

/// Number of flash bytes covered by the device's frame image.
inline std::size_t image_span(const DeviceState& dev) {
  return frame_flash_address(dev.rom().frame_count());
}

/// Applies a flash attack. Throws RegionLocked, with flash unchanged, when the
/// target touches a write-locked region. Returns the affected [addr, +len).
inline std::pair<std::size_t, std::size_t> corrupt_flash(DeviceState& dev, const AttackSpec& spec) {
  Rng rng(spec.seed);
  const std::size_t span = image_span(dev);
  auto pick = [&rng](std::size_t bound) {
    return static_cast<std::size_t>(std::uniform_int_distribution<std::size_t>(0, bound - 1)(rng));
  };

  switch (spec.kind) {
    case AttackKind::FlashBitFlip: {
      const std::size_t frame = spec.frame.value_or(pick(dev.rom().frame_count()));
      const std::size_t bit = spec.bit.value_or(pick(kFramePayloadSize * 8));
      if (bit >= kFramePayloadSize * 8) throw Error(ErrorCode::ConfigError, "payload bit out of range");
      const std::size_t addr = frame_flash_address(frame) + kFrameHeaderSize + bit / 8;
      Bytes b = dev.flash_read(addr, 1);
      b[0] ^= static_cast<Byte>(1u << (bit % 8));
      dev.flash_write(addr, b);
      return {addr, 1};
    }
    case AttackKind::FlashOverwrite: {
      const std::size_t len = spec.length.value_or(1 + pick(64));
      if (len == 0) throw Error(ErrorCode::ConfigError, "overwrite length must be > 0");
      const std::size_t addr = spec.addr.value_or(pick(span - std::min(len, span) + 1));
      Bytes data = dev.flash_read(addr, len);
      // Every targeted byte really changes, otherwise there is nothing to detect.
      for (Byte& b : data) {
        const Byte r = static_cast<Byte>(rng());
        b = r != b ? r : static_cast<Byte>(~b);
      }
      dev.flash_write(addr, data);
      return {addr, len};
    }
    case AttackKind::FrameReorder: {
      const std::size_t a = spec.frame.value_or(0);
      const std::size_t b = spec.frame_b.value_or(a + 1);
      if (a == b) throw Error(ErrorCode::ConfigError, "frame_reorder needs two distinct frames");
      const std::size_t addr_a = frame_flash_address(a);
      const std::size_t addr_b = frame_flash_address(b);
      if (dev.is_write_locked(addr_a, kFrameSize) || dev.is_write_locked(addr_b, kFrameSize)) {
        throw Error(ErrorCode::RegionLocked, "frame_reorder target is write-locked");
      }
      const Bytes fa = dev.flash_read(addr_a, kFrameSize);
      const Bytes fb = dev.flash_read(addr_b, kFrameSize);
      dev.flash_write(addr_a, fb);
      dev.flash_write(addr_b, fa);
      return {std::min(addr_a, addr_b), std::max(addr_a, addr_b) + kFrameSize - std::min(addr_a, addr_b)};
    }
    default:
      throw Error(ErrorCode::ConfigError, std::string(to_string(spec.kind)) + " is not a flash attack");
  }
}

/// Builds a channel interceptor. `replay_source` holds the encoded ProverAuth
/// recorded in an earlier session and is required for ChannelReplay.
inline Interceptor intercept(const AttackSpec& spec, std::optional<Bytes> replay_source = std::nullopt) {
  switch (spec.kind) {
    case AttackKind::ChannelTamper: {
      Rng rng(spec.seed);
      const std::size_t message = spec.message.value_or(rng() % 3);
      const std::optional<std::size_t> bit = spec.bit;
      const std::uint64_t draw = rng();
      return [message, bit, draw](const Delivery& d) {
        Bytes wire = d.wire;
        if (d.index == message) {
          const std::size_t b = bit.value_or(draw % (wire.size() * 8)) % (wire.size() * 8);
          wire[b / 8] ^= static_cast<Byte>(1u << (b % 8));
        }
        return std::vector<Bytes>{wire};
      };
    }
    case AttackKind::ChannelReplay: {
      if (!replay_source) throw Error(ErrorCode::ConfigError, "replay needs a recorded message");
      Bytes recorded = *replay_source;
      return [recorded](const Delivery& d) {
        if (d.direction == Direction::ToVerifier && d.index == 1) return std::vector<Bytes>{recorded};
        return std::vector<Bytes>{d.wire};
      };
    }
    case AttackKind::ChannelFlood: {
      const std::size_t count = spec.count;
      return [count](const Delivery& d) {
        if (d.index == 0) return std::vector<Bytes>(count, d.wire);
        return std::vector<Bytes>{d.wire};
      };
    }
    default:
      return [](const Delivery& d) { return std::vector<Bytes>{d.wire}; };
  }
}

struct ScenarioConfig {
  Bytes image;
  Bytes key;
  std::optional<Bytes> verifier_key;  // defaults to `key`
  ChipInfo chip_info;
  CycleCosts costs = CycleCosts::paper();
  bool flag_f = true;
  AttestParams attest_params{0, 1024};
  bool resilience = true;
  AttackSpec attack;
};

/// Deterministic stand-in firmware: 5734 bytes, the size of the reference
/// application, filled from a seeded generator.
inline Bytes synthetic_image(std::uint64_t seed, std::size_t size = 5734) {
  Rng rng(seed ^ 0x5EC0B007ULL);
  Bytes out(size);
  for (Byte& b : out) b = static_cast<Byte>(rng());
  return out;
}

inline Bytes default_test_key() {
  Bytes k(32);
  for (std::size_t i = 0; i < k.size(); ++i) k[i] = static_cast<Byte>(0xA0 + i);
  return k;
}

inline ChipInfo default_chip_info() {
  ChipInfo ci;
  for (std::size_t i = 0; i < ci.uuid.size(); ++i) ci.uuid[i] = static_cast<Byte>(0x10 + i);
  ci.vendor_id = {0x53, 0x52, 0x43, 0x52};
  ci.serial = {0, 0, 0, 0, 0, 0, 0x12, 0x34};
  ci.firmware_version = {1, 0, 0, 0};
  ci.board_version = {1, 0, 0, 0};
  return ci;
}

namespace detail {

inline std::uint64_t parse_uint(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  int base = 10;
  if (value.starts_with("0x") || value.starts_with("0X")) {
    value.remove_prefix(2);
    base = 16;
  }
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v, base);
  if (ec != std::errc{} || ptr != value.data() + value.size() || value.empty()) {
    throw Error(ErrorCode::ConfigError, std::string(key) + ": not an unsigned integer");
  }
  return v;
}

inline bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "on") return true;
  if (value == "0" || value == "false" || value == "off") return false;
  throw Error(ErrorCode::ConfigError, std::string(key) + ": expected a boolean");
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace detail

/// Flat `key=value` scenario file. Blank lines and `#` comments are ignored.
/// Relative `image=` and `chip_info=` paths resolve against `base_dir`.
inline ScenarioConfig parse_scenario_config(std::string_view text,
                                            const std::filesystem::path& base_dir = {}) {
  ScenarioConfig cfg;
  cfg.key = default_test_key();
  cfg.chip_info = default_chip_info();
  std::optional<std::filesystem::path> image_path;

  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = detail::trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    auto uint = [&] { return detail::parse_uint(key, value); };

    if (key == "image") {
      image_path = std::filesystem::path(value);
    } else if (key == "image_size") {
      cfg.image = synthetic_image(0, uint());
    } else if (key == "key_hex") {
      cfg.key = from_hex(value);
    } else if (key == "verifier_key_hex") {
      cfg.verifier_key = from_hex(value);
    } else if (key == "chip_info") {
      std::filesystem::path p(value);
      cfg.chip_info = ChipInfo::parse(detail::read_file(p.is_absolute() ? p : base_dir / p));
    } else if (key == "attack") {
      cfg.attack.kind = parse_attack_kind(value);
    } else if (key == "frame") {
      cfg.attack.frame = uint();
    } else if (key == "frame_b") {
      cfg.attack.frame_b = uint();
    } else if (key == "bit") {
      cfg.attack.bit = uint();
    } else if (key == "addr") {
      cfg.attack.addr = uint();
    } else if (key == "len") {
      cfg.attack.length = uint();
    } else if (key == "message") {
      cfg.attack.message = uint();
    } else if (key == "count") {
      cfg.attack.count = uint();
    } else if (key == "seed") {
      cfg.attack.seed = uint();
    } else if (key == "flag_f") {
      cfg.flag_f = detail::parse_bool(key, value);
    } else if (key == "attest_addr") {
      cfg.attest_params.s_addr = static_cast<std::uint32_t>(uint());
    } else if (key == "attest_len") {
      cfg.attest_params.l = static_cast<std::uint32_t>(uint());
    } else if (key == "resilience") {
      cfg.resilience = detail::parse_bool(key, value);
    } else {
      throw Error(ErrorCode::ConfigError, "unknown key '" + std::string(key) + "'");
    }
  }

  if (image_path) {
    cfg.image = detail::read_file(image_path->is_absolute() ? *image_path : base_dir / *image_path);
  }
  if (cfg.image.empty()) cfg.image = synthetic_image(0);
  if (cfg.key.empty()) throw Error(ErrorCode::ConfigError, "empty key");
  return cfg;
}

inline ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  const Bytes raw = detail::read_file(path);
  return parse_scenario_config(std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()),
                               path.parent_path());
}

namespace detail {

inline bool is_flash_attack(AttackKind k) {
  return k == AttackKind::FlashBitFlip || k == AttackKind::FlashOverwrite || k == AttackKind::FrameReorder;
}

/// An honest session on a twin device, used to record traffic for replay.
inline Bytes record_prover_auth(const SecureRom& rom, const SecretKey& key, std::uint64_t seed) {
  DeviceState twin = DeviceState::provision(rom);
  VerifierSession v(key, VerifierIntent::attest({0, 1024}));
  ProverSession p(twin);
  Rng rng(seed);
  const SessionOutcome o = run_session(v, p, twin, rng);
  for (const TranscriptEntry& e : o.transcript) {
    if (e.direction == Direction::ToVerifier && !e.wire.empty() &&
        e.wire[0] == static_cast<Byte>(MessageType::ProverAuth)) {
      return e.wire;
    }
  }
  throw Error(ErrorCode::InvalidState, "recording session produced no ProverAuth");
}

}  // namespace detail

/// Fresh device and sessions, one attack, the full authenticate-then-command
/// flow, graded.
inline ScenarioReport run_scenario(const ScenarioConfig& cfg) {
  if (cfg.image.empty()) throw Error(ErrorCode::ConfigError, "scenario needs an image");
  const SecretKey key(cfg.key);
  const SecureRom rom = SecureRom::from_image(cfg.chip_info, key, cfg.image);
  DeviceState dev = DeviceState::provision(rom);
  const Bytes golden = serialize_frame_stream(rom.golden_frames());

  ScenarioReport report;
  report.attack = cfg.attack;

  if (detail::is_flash_attack(cfg.attack.kind)) {
    try {
      corrupt_flash(dev, cfg.attack);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RegionLocked) throw;
      report.attack_blocked = true;
    }
  }

  SecretKey verifier_key = cfg.attack.kind == AttackKind::WrongKey
                               ? SecretKey(cfg.verifier_key.value_or(Bytes(cfg.key.size(), 0x5A)))
                               : SecretKey(cfg.verifier_key.value_or(cfg.key));
  if (cfg.attack.kind == AttackKind::WrongKey && verifier_key == key) {
    throw Error(ErrorCode::ConfigError, "wrong_key scenario needs a verifier key different from K");
  }

  // The verifier expects the golden content: the whole image for a boot, or
  // the golden bytes of the attested region.
  VerifierIntent intent;
  if (cfg.flag_f) {
    intent = VerifierIntent::reset(golden);
  } else {
    const std::size_t end = std::size_t{cfg.attest_params.s_addr} + cfg.attest_params.l;
    Bytes expected = end <= golden.size()
                         ? Bytes(golden.begin() + cfg.attest_params.s_addr, golden.begin() + static_cast<std::ptrdiff_t>(end))
                         : Bytes{};
    intent = VerifierIntent::attest(cfg.attest_params, std::move(expected));
  }

  VerifierSession verifier(std::move(verifier_key), std::move(intent));
  ProverConfig pcfg;
  pcfg.costs = cfg.costs;
  pcfg.resilience_enabled = cfg.resilience;
  ProverSession prover(dev, pcfg);

  Interceptor hook;
  if (cfg.attack.kind == AttackKind::ChannelReplay) {
    hook = intercept(cfg.attack, detail::record_prover_auth(rom, key, cfg.attack.seed + 1));
  } else {
    hook = intercept(cfg.attack);
  }

  Rng rng(cfg.attack.seed);
  const SessionOutcome outcome = run_session(verifier, prover, dev, rng, hook);

  report.command_sent = outcome.command_sent;
  report.session_closed = outcome.closed() || outcome.stalled;

  bool boot_failed_frame = false;
  if (const auto& boot = prover.boot_result()) {
    std::size_t failed = 0;
    for (const FrameVerdict& v : boot->verdicts) {
      if (!v.passed) {
        ++failed;
        boot_failed_frame = true;
      }
    }
    report.recovered = failed > 0 && boot->recovered_count == failed && boot->integrity;
  }
  const bool report_mismatch = outcome.report.has_value() && !outcome.report_valid;
  report.detected = boot_failed_frame || report.session_closed || report_mismatch;

  const ByteView flash_image = dev.flash().first(golden.size());
  const bool flash_golden = std::equal(flash_image.begin(), flash_image.end(), golden.begin());
  if (prover.boot_result()) {
    report.final_integrity = prover.boot_result()->integrity && flash_golden;
  } else {
    report.final_integrity = flash_golden;
  }
  return report;
}

}  // namespace sracare
