// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "sracare/secure_boot.hpp"
#include "test_support.hpp"

namespace sracare {
namespace {

using testing::flash_matches_golden;
using testing::test_device;
using testing::test_key;

void flip_payload_bit(DeviceState& dev, std::size_t frame, std::size_t bit) {
  const std::size_t addr = frame * 1024 + 56 + bit / 8;
  Bytes b = dev.flash_read(addr, 1);
  b[0] ^= static_cast<Byte>(1u << (bit % 8));
  dev.flash_write(addr, b);
}

TEST(ChainOfTrustTest, EmptyIsTrusted) { EXPECT_TRUE(chain_of_trust(std::vector<bool>{})); }

TEST(ChainOfTrustTest, AllPass) { EXPECT_TRUE(chain_of_trust(std::vector<bool>(6, true))); }

TEST(ChainOfTrustTest, ExhaustiveAgainstAndFoldUpToTwelve) {
  for (std::size_t n = 0; n <= 12; ++n) {
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      std::vector<bool> v(n);
      bool fold = true;
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = (mask >> i) & 1;
        fold = fold && v[i];
      }
      ASSERT_EQ(chain_of_trust(v), fold);
      // Every prefix extending past the first failure stays untrusted.
      for (std::size_t j = 0; j <= n; ++j) {
        std::vector<bool> prefix(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(j));
        bool expected = true;
        for (bool x : prefix) expected = expected && x;
        ASSERT_EQ(chain_of_trust(prefix), expected);
      }
    }
  }
}

TEST(BootstrapTest, CleanImageMatchesTableCycles) {
  DeviceState dev = test_device();
  const BootResult r = bootstrap(dev, test_key(), CycleCosts::paper(), true);
  EXPECT_TRUE(r.integrity);
  EXPECT_EQ(r.recovered_count, 0u);
  ASSERT_EQ(r.verdicts.size(), 6u);
  EXPECT_EQ(r.cycles, 576083u + 5u * 26758u);
  EXPECT_EQ(r.cycles, 709873u);
  EXPECT_EQ(r.cycles, total_cycles(CycleCosts::paper(), 6, true));
  EXPECT_EQ(dev.cycle_counter(), 709873u);
  EXPECT_TRUE(flash_matches_golden(dev));
}

TEST(BootstrapTest, FirstFrameRegionIsClearedAndRewritten) {
  DeviceState dev = test_device();
  std::vector<AccessEvent> log;
  dev.set_access_observer([&log](const AccessEvent& e) { log.push_back(e); });
  const BootResult r = bootstrap(dev, test_key(), CycleCosts::paper(), true);
  bool erased0 = false;
  for (const AccessEvent& e : log) {
    if (e.kind == AccessEvent::Kind::FlashErase && e.addr == 0) erased0 = true;
  }
  EXPECT_TRUE(erased0);
  EXPECT_EQ(r.events[2].kind, BootEvent::Kind::Reflash);
}

TEST(BootstrapTest, CorruptedFrameRecovered) {
  DeviceState dev = test_device();
  flip_payload_bit(dev, 3, 17);
  const BootResult r = bootstrap(dev, test_key(), CycleCosts::paper(), true);
  ASSERT_EQ(r.verdicts.size(), 6u);
  EXPECT_FALSE(r.verdicts[3].passed);
  EXPECT_TRUE(r.verdicts[3].recovered);
  EXPECT_TRUE(r.integrity);
  EXPECT_EQ(r.recovered_count, 1u);
  EXPECT_TRUE(flash_matches_golden(dev));
  EXPECT_TRUE(dev.is_write_locked(3 * 1024, 1024));
}

TEST(BootstrapTest, CorruptedFrameWithoutResilienceHalts) {
  DeviceState dev = test_device();
  flip_payload_bit(dev, 3, 17);
  const BootResult r = bootstrap(dev, test_key(), CycleCosts::paper(), false);
  EXPECT_FALSE(r.integrity);
  ASSERT_EQ(r.verdicts.size(), 4u);
  EXPECT_FALSE(r.verdicts[3].passed);
  EXPECT_FALSE(r.verdicts[3].recovered);
  EXPECT_EQ(r.cycles, 576083u + 3u * 26758u);
  EXPECT_FALSE(flash_matches_golden(dev));
}

TEST(BootstrapTest, StructurallyBrokenFrameIsRecoverable) {
  DeviceState dev = test_device();
  dev.flash_write(2 * 1024 + 42, Bytes{0x09});  // header_version
  const BootResult r = bootstrap(dev, test_key(), CycleCosts::paper(), true);
  EXPECT_FALSE(r.verdicts[2].passed);
  EXPECT_TRUE(r.verdicts[2].recovered);
  EXPECT_TRUE(r.integrity);
}

TEST(BootstrapTest, RecoveryCostChargedSeparately) {
  DeviceState dev = test_device();
  flip_payload_bit(dev, 1, 0);
  flip_payload_bit(dev, 4, 0);
  CycleCosts costs = CycleCosts::paper();
  costs.per_recovery = 1000;
  const BootResult r = bootstrap(dev, test_key(), costs, true);
  EXPECT_EQ(r.cycles, 709873u + 2000u);
}

TEST(BootstrapTest, FramesExaminedStrictlyInOrder) {
  DeviceState dev = test_device();
  flip_payload_bit(dev, 2, 5);
  std::vector<std::size_t> reads;
  dev.set_access_observer([&reads](const AccessEvent& e) {
    if (e.kind == AccessEvent::Kind::FlashRead) reads.push_back(e.addr / 1024);
  });
  const BootResult r = bootstrap(dev, test_key(), CycleCosts::paper(), true);
  for (std::size_t i = 1; i < reads.size(); ++i) ASSERT_LE(reads[i - 1], reads[i]);

  // Frame i+1 is examined only after frame i has its verdict and any recovery.
  std::size_t last_final = 0;
  bool any = false;
  for (const BootEvent& e : r.events) {
    if (e.kind == BootEvent::Kind::Examine && any) {
      ASSERT_EQ(e.frame, last_final + 1);
    }
    if (e.kind == BootEvent::Kind::Verdict || e.kind == BootEvent::Kind::Recover) {
      last_final = e.frame;
      any = true;
    }
  }
}

TEST(BootstrapTest, AnyNumberOfCorruptedFramesRecovered) {
  const DeviceState base = test_device();
  for (std::uint32_t mask = 0; mask < 64; ++mask) {
    DeviceState dev = base;
    std::size_t corrupted = 0;
    for (std::size_t f = 0; f < 6; ++f) {
      if ((mask >> f) & 1) {
        flip_payload_bit(dev, f, f * 97);
        ++corrupted;
      }
    }
    const BootResult r = bootstrap(dev, test_key(), CycleCosts::paper(), true);
    ASSERT_TRUE(r.integrity) << mask;
    ASSERT_EQ(r.recovered_count, corrupted);
    ASSERT_TRUE(flash_matches_golden(dev));
  }
}

TEST(BootstrapTest, CycleAccountingExactForVariousSizes) {
  for (std::size_t size : {1u, 968u, 969u, 4000u, 20000u}) {
    DeviceState dev = DeviceState::provision(testing::test_rom(size));
    const unsigned n = static_cast<unsigned>(dev.rom().frame_count());
    const BootResult r = bootstrap(dev, test_key(), CycleCosts::paper(), true);
    EXPECT_EQ(r.cycles, total_cycles(CycleCosts::paper(), n, true)) << size;
  }
}

}  // namespace
}  // namespace sracare
