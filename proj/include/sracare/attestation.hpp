// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "sracare/crypto.hpp"
#include "sracare/device.hpp"

namespace sracare {

/// Flash region the verifier asks the prover to measure.
struct AttestParams {
  std::uint32_t s_addr = 0;
  std::uint32_t l = 0;

  friend bool operator==(const AttestParams&, const AttestParams&) = default;
};

/// R = HMAC(session_key, flash[s_addr, s_addr + l)). Read-only on the device.
inline Digest attest(const DeviceState& dev, const SecretKey& session_key, const AttestParams& params) {
  if (params.l == 0) throw Error(ErrorCode::InvalidAttestParams, "attestation length must be > 0");
  return hmac_sha256(session_key, dev.flash_read(params.s_addr, params.l));
}

}  // namespace sracare
