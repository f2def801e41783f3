// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

// Verifier/prover mutual authentication followed by one command (secure boot
// or attestation) and its report.
//
//   V -> P  Challenge     n1
//   P -> V  ProverAuth    A = HMAC(K, n1) || n2
//   V -> P  VerifierAuth  B = HMAC(K1, n2)
//   P -> V  AuthResult    C
//   V -> P  Command       F, D            (only if C)
//   P -> V  Report        R
//
// Wire format: [type u8][len u16 LE][body].

#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <utility>
#include <variant>
#include <vector>

#include "sracare/attestation.hpp"
#include "sracare/bytes.hpp"
#include "sracare/crypto.hpp"
#include "sracare/device.hpp"
#include "sracare/secure_boot.hpp"
#include "sracare/timing.hpp"

namespace sracare {

struct Challenge {
  Nonce n1;
  friend bool operator==(const Challenge&, const Challenge&) = default;
};

struct ProverAuth {
  Digest mac;
  Nonce n2;
  friend bool operator==(const ProverAuth&, const ProverAuth&) = default;
};

struct VerifierAuth {
  Digest b;
  friend bool operator==(const VerifierAuth&, const VerifierAuth&) = default;
};

struct AuthResult {
  bool c = false;
  friend bool operator==(const AuthResult&, const AuthResult&) = default;
};

struct Command {
  bool f = true;  // true: reset and secure boot; false: attest region d
  std::optional<AttestParams> d;
  friend bool operator==(const Command&, const Command&) = default;
};

enum class ReportStatus : std::uint8_t {
  Ok = 0,
  IntegrityFailure = 1,
  OutOfBounds = 2,
  BadRequest = 3,
};

struct Report {
  ReportStatus status = ReportStatus::Ok;
  Digest r;
  friend bool operator==(const Report&, const Report&) = default;
};

struct Close {
  friend bool operator==(const Close&, const Close&) = default;
};

using Message = std::variant<Challenge, ProverAuth, VerifierAuth, AuthResult, Command, Report, Close>;

enum class MessageType : std::uint8_t {
  Challenge = 1,
  ProverAuth = 2,
  VerifierAuth = 3,
  AuthResult = 4,
  Command = 5,
  Report = 6,
  Close = 7,
};

inline MessageType type_of(const Message& m) {
  return static_cast<MessageType>(m.index() + 1);
}

inline const char* to_string(MessageType t) {
  switch (t) {
    case MessageType::Challenge: return "Challenge";
    case MessageType::ProverAuth: return "ProverAuth";
    case MessageType::VerifierAuth: return "VerifierAuth";
    case MessageType::AuthResult: return "AuthResult";
    case MessageType::Command: return "Command";
    case MessageType::Report: return "Report";
    case MessageType::Close: return "Close";
  }
  return "?";
}

inline constexpr std::size_t kMessageHeaderSize = 3;

inline Bytes encode_message(const Message& m) {
  Bytes body;
  std::visit(
      [&body](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Challenge>) {
          append(body, v.n1.view());
        } else if constexpr (std::is_same_v<T, ProverAuth>) {
          append(body, v.mac.view());
          append(body, v.n2.view());
        } else if constexpr (std::is_same_v<T, VerifierAuth>) {
          append(body, v.b.view());
        } else if constexpr (std::is_same_v<T, AuthResult>) {
          body.push_back(v.c ? 1 : 0);
        } else if constexpr (std::is_same_v<T, Command>) {
          body.push_back(v.f ? 1 : 0);
          body.push_back(v.d ? 1 : 0);
          if (v.d) {
            put_u32(body, v.d->s_addr);
            put_u32(body, v.d->l);
          }
        } else if constexpr (std::is_same_v<T, Report>) {
          body.push_back(static_cast<Byte>(v.status));
          append(body, v.r.view());
        }
      },
      m);
  Bytes out;
  out.reserve(kMessageHeaderSize + body.size());
  out.push_back(static_cast<Byte>(type_of(m)));
  put_u16(out, static_cast<std::uint16_t>(body.size()));
  append(out, body);
  return out;
}

namespace detail {

inline bool read_flag(Byte b) {
  if (b > 1) throw Error(ErrorCode::MalformedBody, "boolean field must be 0 or 1");
  return b == 1;
}

inline void expect_len(std::size_t len, std::size_t want) {
  if (len != want) {
    throw Error(ErrorCode::LengthMismatch,
                "body length " + std::to_string(len) + ", expected " + std::to_string(want));
  }
}

}  // namespace detail

/// Total encoded size of the message at the start of `buffered`, once its
/// header is available. Used to frame messages on a byte stream.
inline std::optional<std::size_t> encoded_size(ByteView buffered) {
  if (buffered.size() < kMessageHeaderSize) return std::nullopt;
  return kMessageHeaderSize + get_u16(buffered, 1);
}

inline Message decode_message(ByteView in) {
  if (in.size() < kMessageHeaderSize) throw Error(ErrorCode::TruncatedBody, "missing header");
  const Byte type = in[0];
  const std::size_t len = get_u16(in, 1);
  if (type < 1 || type > 7) throw Error(ErrorCode::UnknownType, "type " + std::to_string(type));
  if (in.size() - kMessageHeaderSize < len) {
    throw Error(ErrorCode::TruncatedBody, "declared " + std::to_string(len) + " bytes, have " +
                                              std::to_string(in.size() - kMessageHeaderSize));
  }
  if (in.size() - kMessageHeaderSize > len) {
    throw Error(ErrorCode::LengthMismatch, "trailing bytes after body");
  }
  const ByteView body = in.subspan(kMessageHeaderSize);

  switch (static_cast<MessageType>(type)) {
    case MessageType::Challenge:
      detail::expect_len(len, 32);
      return Challenge{Nonce::from(body)};
    case MessageType::ProverAuth:
      detail::expect_len(len, 64);
      return ProverAuth{Digest::from(body.first(32)), Nonce::from(body.subspan(32))};
    case MessageType::VerifierAuth:
      detail::expect_len(len, 32);
      return VerifierAuth{Digest::from(body)};
    case MessageType::AuthResult:
      detail::expect_len(len, 1);
      return AuthResult{detail::read_flag(body[0])};
    case MessageType::Command: {
      if (len != 2 && len != 10) detail::expect_len(len, 10);
      Command cmd;
      cmd.f = detail::read_flag(body[0]);
      const bool has_d = detail::read_flag(body[1]);
      detail::expect_len(len, has_d ? 10 : 2);
      if (has_d) cmd.d = AttestParams{get_u32(body, 2), get_u32(body, 6)};
      return cmd;
    }
    case MessageType::Report: {
      detail::expect_len(len, 33);
      if (body[0] > static_cast<Byte>(ReportStatus::BadRequest)) {
        throw Error(ErrorCode::MalformedBody, "unknown report status");
      }
      return Report{static_cast<ReportStatus>(body[0]), Digest::from(body.subspan(1))};
    }
    case MessageType::Close:
      detail::expect_len(len, 0);
      return Close{};
  }
  throw Error(ErrorCode::UnknownType, "type " + std::to_string(type));
}

using Rng = std::mt19937_64;

inline Nonce draw_nonce(Rng& rng) {
  Nonce n;
  for (std::size_t i = 0; i < n.bytes.size(); i += 8) {
    const std::uint64_t word = rng();
    for (std::size_t j = 0; j < 8; ++j) n.bytes[i + j] = static_cast<Byte>(word >> (8 * j));
  }
  return n;
}

inline constexpr std::size_t kDefaultMessageBudget = 16;

/// Boot report: R = HMAC(K1, status || SHA256(flash image region)).
inline Digest boot_report_digest(const SecretKey& k1, ReportStatus status, ByteView flash_image) {
  Bytes material{static_cast<Byte>(status)};
  append(material, sha256(flash_image).view());
  return hmac_sha256(k1, material);
}

/// What the verifier asks for once authenticated, and the measurement it
/// expects back: the attested region bytes, or the full golden flash image for
/// a boot.
struct VerifierIntent {
  Command command;
  std::optional<Bytes> expected;

  static VerifierIntent reset(std::optional<Bytes> expected_flash = std::nullopt) {
    return {Command{true, std::nullopt}, std::move(expected_flash)};
  }
  static VerifierIntent attest(AttestParams d, std::optional<Bytes> expected_region = std::nullopt) {
    return {Command{false, d}, std::move(expected_region)};
  }
};

enum class VerifierStep { Idle, SentChallenge, AwaitResult, Authenticated, Complete, Closed };
enum class ProverStep { AwaitChallenge, SentProverAuth, Authenticated, Complete, Closed };

inline const char* to_string(VerifierStep s) {
  switch (s) {
    case VerifierStep::Idle: return "Idle";
    case VerifierStep::SentChallenge: return "SentChallenge";
    case VerifierStep::AwaitResult: return "AwaitResult";
    case VerifierStep::Authenticated: return "Authenticated";
    case VerifierStep::Complete: return "Complete";
    case VerifierStep::Closed: return "Closed";
  }
  return "?";
}

inline const char* to_string(ProverStep s) {
  switch (s) {
    case ProverStep::AwaitChallenge: return "AwaitChallenge";
    case ProverStep::SentProverAuth: return "SentProverAuth";
    case ProverStep::Authenticated: return "Authenticated";
    case ProverStep::Complete: return "Complete";
    case ProverStep::Closed: return "Closed";
  }
  return "?";
}

class VerifierSession {
 public:
  VerifierSession(SecretKey key, VerifierIntent intent, std::size_t budget = kDefaultMessageBudget)
      : key_(std::move(key)), intent_(std::move(intent)), budget_(budget) {}

  Challenge start(Rng& rng) {
    require(VerifierStep::Idle);
    n1_ = draw_nonce(rng);
    step_ = VerifierStep::SentChallenge;
    return Challenge{*n1_};
  }

  Message handle_prover_auth(const ProverAuth& msg) {
    require(VerifierStep::SentChallenge);
    const Digest expected = hmac_sha256(key_, n1_->view());
    if (!constant_time_equal(expected.view(), msg.mac.view())) return close();
    n2_ = msg.n2;
    k1_ = derive_k1(msg.mac, *n1_, msg.n2);
    step_ = VerifierStep::AwaitResult;
    return VerifierAuth{hmac_sha256(*k1_, n2_->view())};
  }

  Message handle_result(const AuthResult& msg) {
    require(VerifierStep::AwaitResult);
    if (!intent_.command.f && !intent_.command.d) {
      throw Error(ErrorCode::MissingAttestParams, "attest command without a region");
    }
    if (!msg.c) return close();
    step_ = VerifierStep::Authenticated;
    return intent_.command;
  }

  /// Checks R against the locally recomputed expectation, when one is set.
  void handle_report(const Report& msg) {
    require(VerifierStep::Authenticated);
    report_ = msg;
    if (intent_.expected && msg.status == ReportStatus::Ok) {
      report_valid_ = constant_time_equal(msg.r.view(), expected_report().view());
    } else {
      report_valid_ = false;
    }
    step_ = VerifierStep::Complete;
  }

  /// Dispatch with the message budget applied. Out-of-order messages are
  /// dropped; exceeding the budget closes the session.
  std::optional<Message> receive(const Message& msg) {
    if (step_ == VerifierStep::Closed || step_ == VerifierStep::Complete) return std::nullopt;
    if (++received_ > budget_) return close();
    try {
      return std::visit(
          [this](const auto& v) -> std::optional<Message> {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ProverAuth>) {
              return handle_prover_auth(v);
            } else if constexpr (std::is_same_v<T, AuthResult>) {
              return handle_result(v);
            } else if constexpr (std::is_same_v<T, Report>) {
              handle_report(v);
              return std::nullopt;
            } else if constexpr (std::is_same_v<T, Close>) {
              abort();
              return std::nullopt;
            } else {
              return std::nullopt;
            }
          },
          msg);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvalidState) return std::nullopt;
      throw;
    }
  }

  /// Local teardown, e.g. after an undecodable message.
  Message close() {
    step_ = VerifierStep::Closed;
    k1_.reset();
    return Close{};
  }
  void abort() { close(); }

  Digest expected_report() const {
    if (!k1_ || !intent_.expected) throw Error(ErrorCode::InvalidState, "no expectation available");
    if (intent_.command.f) return boot_report_digest(*k1_, ReportStatus::Ok, *intent_.expected);
    return hmac_sha256(*k1_, *intent_.expected);
  }

  VerifierStep step() const { return step_; }
  const std::optional<Nonce>& n1() const { return n1_; }
  const std::optional<Nonce>& n2() const { return n2_; }
  const std::optional<SecretKey>& k1() const { return k1_; }
  const std::optional<Report>& report() const { return report_; }
  bool report_valid() const { return report_valid_; }
  const VerifierIntent& intent() const { return intent_; }

 private:
  void require(VerifierStep expected) const {
    if (step_ != expected) {
      throw Error(ErrorCode::InvalidState, std::string("verifier is in ") + to_string(step_) +
                                               ", expected " + to_string(expected));
    }
  }

  SecretKey key_;
  VerifierIntent intent_;
  std::size_t budget_;
  std::size_t received_ = 0;
  VerifierStep step_ = VerifierStep::Idle;
  std::optional<Nonce> n1_;
  std::optional<Nonce> n2_;
  std::optional<SecretKey> k1_;
  std::optional<Report> report_;
  bool report_valid_ = false;
};

struct ProverConfig {
  CycleCosts costs = CycleCosts::paper();
  bool resilience_enabled = true;
  std::size_t budget = kDefaultMessageBudget;
};

class ProverSession {
 public:
  explicit ProverSession(SecretKey key, ProverConfig config = {})
      : key_(std::move(key)), config_(config) {}

  /// Uses the key provisioned in the device's secure ROM.
  explicit ProverSession(const DeviceState& dev, ProverConfig config = {})
      : ProverSession(dev.rom().key(), config) {}

  ProverAuth handle_challenge(const DeviceState& dev, const Challenge& msg) {
    require(ProverStep::AwaitChallenge);
    const Digest mac = hmac_sha256(key_, msg.n1.view());
    const Nonce n2 = generate_n2(key_, dev.rom_chip_info_bytes(), msg.n1);
    n1_ = msg.n1;
    mac_ = mac;
    n2_ = n2;
    step_ = ProverStep::SentProverAuth;
    return ProverAuth{mac, n2};
  }

  AuthResult handle_verifier_auth(const VerifierAuth& msg) {
    require(ProverStep::SentProverAuth);
    SecretKey k1 = derive_k1(*mac_, *n1_, *n2_);
    const Digest expected = hmac_sha256(k1, n2_->view());
    const bool c = constant_time_equal(expected.view(), msg.b.view());
    if (c) {
      k1_ = std::move(k1);
      step_ = ProverStep::Authenticated;
    } else {
      step_ = ProverStep::Closed;
    }
    return AuthResult{c};
  }

  /// Device failures come back as a report status, never as an exception.
  Report handle_command(DeviceState& dev, const Command& msg) {
    require(ProverStep::Authenticated);
    step_ = ProverStep::Complete;
    if (msg.f) {
      // System reset: PMP locks clear, then the secure boot runs.
      dev = dev.power_cycle();
      boot_ = bootstrap(dev, key_, config_.costs, config_.resilience_enabled);
      const ReportStatus status = boot_->integrity ? ReportStatus::Ok : ReportStatus::IntegrityFailure;
      const Bytes image = dev.flash_read(0, frame_flash_address(dev.rom().frame_count()));
      return Report{status, boot_report_digest(*k1_, status, image)};
    }
    if (!msg.d || msg.d->l == 0) return failure(ReportStatus::BadRequest);
    try {
      return Report{ReportStatus::Ok, attest(dev, *k1_, *msg.d)};
    } catch (const Error&) {
      return failure(ReportStatus::OutOfBounds);
    }
  }

  std::optional<Message> receive(DeviceState& dev, const Message& msg) {
    if (step_ == ProverStep::Closed || step_ == ProverStep::Complete) return std::nullopt;
    if (++received_ > config_.budget) return close();
    try {
      return std::visit(
          [this, &dev](const auto& v) -> std::optional<Message> {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Challenge>) {
              return handle_challenge(dev, v);
            } else if constexpr (std::is_same_v<T, VerifierAuth>) {
              return handle_verifier_auth(v);
            } else if constexpr (std::is_same_v<T, Command>) {
              return handle_command(dev, v);
            } else if constexpr (std::is_same_v<T, Close>) {
              abort();
              return std::nullopt;
            } else {
              return std::nullopt;
            }
          },
          msg);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::InvalidState) return std::nullopt;
      throw;
    }
  }

  Message close() {
    step_ = ProverStep::Closed;
    k1_.reset();
    return Close{};
  }
  void abort() { close(); }

  ProverStep step() const { return step_; }
  const std::optional<SecretKey>& k1() const { return k1_; }
  const std::optional<BootResult>& boot_result() const { return boot_; }

 private:
  void require(ProverStep expected) const {
    if (step_ != expected) {
      throw Error(ErrorCode::InvalidState, std::string("prover is in ") + to_string(step_) +
                                               ", expected " + to_string(expected));
    }
  }

  Report failure(ReportStatus status) const {
    return Report{status, hmac_sha256(*k1_, Bytes{static_cast<Byte>(status)})};
  }

  SecretKey key_;
  ProverConfig config_;
  std::size_t received_ = 0;
  ProverStep step_ = ProverStep::AwaitChallenge;
  std::optional<Nonce> n1_;
  std::optional<Digest> mac_;
  std::optional<Nonce> n2_;
  std::optional<SecretKey> k1_;
  std::optional<BootResult> boot_;
};

enum class Direction { ToProver, ToVerifier };

/// One message on the wire. `index` counts messages sent by either endpoint,
/// in send order, starting at 0 with the Challenge.
struct Delivery {
  Direction direction;
  std::size_t index;
  Bytes wire;
};

/// Sees every sent message and returns what actually reaches the peer, in
/// order. The identity interceptor returns {wire}.
using Interceptor = std::function<std::vector<Bytes>(const Delivery&)>;

struct TranscriptEntry {
  Direction direction;
  Bytes wire;
  bool decoded = false;
};

struct SessionOutcome {
  VerifierStep verifier = VerifierStep::Idle;
  ProverStep prover = ProverStep::AwaitChallenge;
  bool command_sent = false;
  bool command_executed = false;
  bool stalled = false;
  std::optional<Report> report;
  bool report_valid = false;
  std::vector<TranscriptEntry> transcript;

  bool authenticated() const { return command_sent; }
  bool closed() const { return verifier == VerifierStep::Closed || prover == ProverStep::Closed; }
};

/// Runs both endpoints over an ordered, lossless in-process channel until no
/// message is in flight. A session that goes quiet before completing is
/// closed on both ends and flagged as stalled.
inline SessionOutcome run_session(VerifierSession& verifier, ProverSession& prover, DeviceState& dev,
                                  Rng& rng, const Interceptor& interceptor = {},
                                  std::size_t max_deliveries = 4096) {
  SessionOutcome out;
  std::deque<Delivery> in_flight;
  std::size_t sent = 0;

  auto send = [&](Direction dir, const Message& m) {
    if (dir == Direction::ToProver && std::holds_alternative<Command>(m)) out.command_sent = true;
    Delivery d{dir, sent++, encode_message(m)};
    if (!interceptor) {
      in_flight.push_back(std::move(d));
      return;
    }
    for (Bytes& wire : interceptor(d)) in_flight.push_back({dir, d.index, std::move(wire)});
  };

  send(Direction::ToProver, verifier.start(rng));
  std::size_t delivered = 0;
  while (!in_flight.empty() && delivered < max_deliveries) {
    Delivery d = std::move(in_flight.front());
    in_flight.pop_front();
    ++delivered;

    TranscriptEntry entry{d.direction, d.wire, false};
    std::optional<Message> reply;
    const Direction back = d.direction == Direction::ToProver ? Direction::ToVerifier : Direction::ToProver;
    try {
      const Message msg = decode_message(d.wire);
      entry.decoded = true;
      if (d.direction == Direction::ToProver) {
        const bool was_authenticated = prover.step() == ProverStep::Authenticated;
        reply = prover.receive(dev, msg);
        if (was_authenticated && std::holds_alternative<Command>(msg) &&
            prover.step() == ProverStep::Complete) {
          out.command_executed = true;
        }
      } else {
        reply = verifier.receive(msg);
      }
    } catch (const Error&) {
      // Undecodable traffic tears the receiving end down.
      const bool already_closed = d.direction == Direction::ToProver
                                      ? prover.step() == ProverStep::Closed
                                      : verifier.step() == VerifierStep::Closed;
      if (!already_closed) {
        reply = d.direction == Direction::ToProver ? prover.close() : verifier.close();
      }
    }
    out.transcript.push_back(std::move(entry));
    if (reply) send(back, *reply);
  }

  const bool verifier_done =
      verifier.step() == VerifierStep::Complete || verifier.step() == VerifierStep::Closed;
  const bool prover_done = prover.step() == ProverStep::Complete || prover.step() == ProverStep::Closed;
  if (!verifier_done || !prover_done) {
    out.stalled = true;
    if (!verifier_done) verifier.abort();
    if (!prover_done) prover.abort();
  }

  out.verifier = verifier.step();
  out.prover = prover.step();
  out.report = verifier.report();
  out.report_valid = verifier.report_valid();
  return out;
}

}  // namespace sracare
