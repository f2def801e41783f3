// Copyright SRACARE contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "sracare/device.hpp"
#include "test_support.hpp"

namespace sracare {
namespace {

using testing::test_device;
using testing::test_key;
using testing::test_rom;

template <typename Fn>
ErrorCode error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::ConfigError;
}

class DeviceTest : public ::testing::Test {
 protected:
  DeviceState dev_ = DeviceState(test_rom());
};

TEST_F(DeviceTest, ZeroLengthRead) { EXPECT_TRUE(dev_.flash_read(0, 0).empty()); }

TEST_F(DeviceTest, ReadYourWrite) {
  dev_.flash_write(100, Bytes{0xAB});
  EXPECT_EQ(dev_.flash_read(100, 1), Bytes{0xAB});
}

TEST_F(DeviceTest, ReadPastCapacity) {
  EXPECT_EQ(error_of([&] { dev_.flash_read(dev_.flash_capacity() - 1, 2); }), ErrorCode::OutOfBounds);
  EXPECT_EQ(error_of([&] { dev_.flash_read(dev_.flash_capacity() + 1, 0); }), ErrorCode::OutOfBounds);
  EXPECT_NO_THROW(dev_.flash_read(dev_.flash_capacity() - 1, 1));
}

TEST_F(DeviceTest, DefaultCapacityAndErasedFill) {
  EXPECT_EQ(dev_.flash_capacity(), 65536u);
  EXPECT_EQ(dev_.flash_read(0, 4), Bytes(4, 0xFF));
}

TEST_F(DeviceTest, WriteIntoLockedRegionRejected) {
  dev_.pmp_lock(0, 1024);
  EXPECT_EQ(error_of([&] { dev_.flash_write(512, Bytes{1}); }), ErrorCode::RegionLocked);
}

TEST_F(DeviceTest, StraddlingWriteIsAllOrNothing) {
  dev_.flash_write(0, Bytes(4096, 0x11));
  dev_.pmp_lock(1024, 1024);
  const Bytes snapshot(dev_.flash().begin(), dev_.flash().end());
  EXPECT_EQ(error_of([&] { dev_.flash_write(1000, Bytes(100, 0x22)); }), ErrorCode::RegionLocked);
  EXPECT_TRUE(std::equal(snapshot.begin(), snapshot.end(), dev_.flash().begin()));
  EXPECT_EQ(error_of([&] { dev_.flash_write(65500, Bytes(100, 0x22)); }), ErrorCode::OutOfBounds);
  EXPECT_TRUE(std::equal(snapshot.begin(), snapshot.end(), dev_.flash().begin()));
}

TEST_F(DeviceTest, EraseSetsFF) {
  dev_.flash_write(10, Bytes(20, 0x00));
  dev_.flash_erase_region(10, 20);
  EXPECT_EQ(dev_.flash_read(10, 20), Bytes(20, 0xFF));
}

TEST_F(DeviceTest, ZeroLengthEraseIsNoOp) {
  dev_.flash_write(10, Bytes{0x00});
  dev_.flash_erase_region(10, 0);
  EXPECT_EQ(dev_.flash_read(10, 1), Bytes{0x00});
}

TEST_F(DeviceTest, EraseLockedRegionRejected) {
  dev_.pmp_lock(2048, 1024);
  EXPECT_EQ(error_of([&] { dev_.flash_erase_region(2048, 16); }), ErrorCode::RegionLocked);
}

TEST_F(DeviceTest, LockOutOfBounds) {
  EXPECT_EQ(error_of([&] { dev_.pmp_lock(65535, 2); }), ErrorCode::OutOfBounds);
}

TEST_F(DeviceTest, LockIsIdempotent) {
  dev_.pmp_lock(0, 1024);
  dev_.pmp_lock(0, 1024);
  ASSERT_EQ(dev_.pmp().regions().size(), 1u);
  EXPECT_EQ(dev_.pmp().regions()[0], (PmpRegion{0, 1024, true}));
}

TEST_F(DeviceTest, AdjacentLocksBoundarySweep) {
  dev_.pmp_lock(0, 1024);
  dev_.pmp_lock(1024, 1024);
  // Exhaustive single-byte sweep over the first 4 KiB against the expected mask.
  for (std::size_t addr = 0; addr < 4096; ++addr) {
    const bool expect_locked = addr < 2048;
    bool rejected = false;
    try {
      dev_.flash_write(addr, Bytes{0});
    } catch (const Error& e) {
      rejected = e.code() == ErrorCode::RegionLocked;
    }
    ASSERT_EQ(rejected, expect_locked) << "addr " << addr;
  }
}

TEST_F(DeviceTest, LocksAreMonotoneUnderRandomOperations) {
  std::mt19937_64 rng(99);
  auto writable = [&] {
    std::vector<bool> mask(dev_.flash_capacity());
    for (std::size_t a = 0; a < mask.size(); a += 64) mask[a] = !dev_.is_write_locked(a, 1);
    return mask;
  };
  auto before = writable();
  for (int i = 0; i < 200; ++i) {
    const std::size_t start = rng() % 60000;
    dev_.pmp_lock(start, rng() % 4096);
    const auto after = writable();
    for (std::size_t a = 0; a < after.size(); ++a) ASSERT_FALSE(after[a] && !before[a]);
    before = after;
  }
  const auto& regions = dev_.pmp().regions();
  for (std::size_t i = 1; i < regions.size(); ++i) ASSERT_LT(regions[i - 1].end(), regions[i].start);
}

TEST_F(DeviceTest, PowerCycleClearsLocksKeepsFlash) {
  dev_.flash_write(0, Bytes{0x12});
  dev_.pmp_lock(0, 1024);
  dev_.add_cycles(5);
  DeviceState next = dev_.power_cycle();
  EXPECT_TRUE(next.pmp().regions().empty());
  EXPECT_EQ(next.flash_read(0, 1), Bytes{0x12});
  EXPECT_EQ(next.cycle_counter(), 5u);
}

TEST(ChipInfoTest, AllZeroSerializesToZeros) { EXPECT_EQ(ChipInfo{}.serialize(), Bytes(36, 0)); }

TEST(ChipInfoTest, UuidComesFirstAndRoundTrips) {
  const ChipInfo ci = default_chip_info();
  const Bytes raw = ci.serialize();
  ASSERT_EQ(raw.size(), 36u);
  EXPECT_TRUE(std::equal(ci.uuid.begin(), ci.uuid.end(), raw.begin()));
  EXPECT_EQ(ChipInfo::parse(raw), ci);
  EXPECT_THROW(ChipInfo::parse(Bytes(35, 0)), Error);
}

TEST(DeviceRomTest, ChipInfoBytesFromRom) {
  const DeviceState dev = test_device();
  EXPECT_EQ(dev.rom_chip_info_bytes(), default_chip_info().serialize());
}

TEST(DeviceRomTest, GoldenFrameLookup) {
  const DeviceState dev = test_device();
  ASSERT_EQ(dev.rom().frame_count(), 6u);
  EXPECT_EQ(dev.rom_golden_frame(0).header.frame_number, 0u);
  EXPECT_EQ(error_of([&] { dev.rom_golden_frame(6); }), ErrorCode::NoSuchFrame);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_TRUE(verify_frame(dev.rom_golden_frame(i), test_key(), static_cast<std::uint32_t>(i)));
  }
}

TEST(DeviceRomTest, TamperedGoldenImageRejectedAtConstruction) {
  auto frames = pack_image(synthetic_image(3, 2000), test_key());
  frames[1].payload[0] ^= 1;
  EXPECT_EQ(error_of([&] { SecureRom(default_chip_info(), test_key(), frames); }), ErrorCode::BadGoldenImage);
}

TEST(DeviceRomTest, ProvisionWritesGoldenImage) {
  const DeviceState dev = test_device();
  EXPECT_TRUE(testing::flash_matches_golden(dev));
  EXPECT_EQ(dev.flash_read(6 * 1024, 1), Bytes{0xFF});
}

TEST(DeviceRomTest, RomUntouchedByFlashAndPmpTraffic) {
  DeviceState dev = test_device();
  const Bytes before = dev.rom().serialize();
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    const std::size_t addr = rng() % 65000;
    try {
      switch (rng() % 3) {
        case 0: dev.flash_write(addr, testing::random_bytes(rng, rng() % 300)); break;
        case 1: dev.flash_erase_region(addr, rng() % 300); break;
        default: dev.pmp_lock(addr, rng() % 300); break;
      }
    } catch (const Error&) {
    }
  }
  EXPECT_EQ(dev.rom().serialize(), before);
}

TEST(RomContainerTest, RoundTripAndLayout) {
  const SecureRom rom = test_rom(3000);
  const Bytes raw = rom.serialize();
  EXPECT_EQ(Bytes(raw.begin(), raw.begin() + 4), to_bytes("SRRM"));
  EXPECT_EQ(raw[4], 1);
  EXPECT_EQ(raw[5], 0);
  EXPECT_EQ(get_u16(raw, 42), 32);
  EXPECT_EQ(get_u32(raw, 76), 4u);
  EXPECT_EQ(raw.size(), 4 + 2 + 36 + 2 + 32 + 4 + 4 * 1024u);
  const SecureRom back = SecureRom::parse(raw);
  EXPECT_EQ(back.serialize(), raw);
  EXPECT_EQ(back.chip_info(), rom.chip_info());
}

TEST(RomContainerTest, MalformedContainersRejected) {
  const Bytes raw = test_rom(1000).serialize();
  Bytes bad_magic = raw;
  bad_magic[0] = 'X';
  EXPECT_EQ(error_of([&] { SecureRom::parse(bad_magic); }), ErrorCode::BadRomImage);
  EXPECT_EQ(error_of([&] { SecureRom::parse(ByteView(raw).first(raw.size() - 1)); }), ErrorCode::BadRomImage);
  EXPECT_EQ(error_of([&] { SecureRom::parse(ByteView(raw).first(10)); }), ErrorCode::BadRomImage);
}

TEST(AccessLogTest, ObserverSeesReadsAndWrites) {
  DeviceState dev = test_device();
  std::vector<AccessEvent> log;
  dev.set_access_observer([&log](const AccessEvent& e) { log.push_back(e); });
  dev.flash_read(0, 4);
  dev.flash_write(8000, Bytes{1});
  ASSERT_EQ(log.size(), 2u);
  EXPECT_EQ(log[0].kind, AccessEvent::Kind::FlashRead);
  EXPECT_EQ(log[1].kind, AccessEvent::Kind::FlashWrite);
  EXPECT_EQ(log[1].addr, 8000u);
}

}  // namespace
}  // namespace sracare
