// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "sracare/attack.hpp"
#include "sracare/attestation.hpp"
#include "sracare/bytes.hpp"
#include "sracare/crypto.hpp"
#include "sracare/device.hpp"
#include "sracare/frame.hpp"
#include "sracare/protocol.hpp"
#include "sracare/resilience.hpp"
#include "sracare/secure_boot.hpp"
#include "sracare/timing.hpp"
