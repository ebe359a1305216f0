#include <random>

#include <gtest/gtest.h>

#include "flashdiff/errors.hpp"
#include "flashdiff/ipl_driver.hpp"
#include "flashdiff/ipu_driver.hpp"
#include "flashdiff/opu_driver.hpp"
#include "flashdiff/workbench.hpp"
#include "flashdiff/workload.hpp"

namespace fd = flashdiff;
using fd::Byte;

namespace {

constexpr std::size_t kPage = 2048;

fd::DriverConfig config(std::uint32_t blocks, fd::PageId pages) {
  fd::DriverConfig c;
  c.geometry = fd::FlashGeometry::desk(blocks);
  c.logical_pages = pages;
  return c;
}

std::vector<Byte> page_of(fd::PageId id) {
  std::vector<Byte> p(kPage);
  std::mt19937_64 rng(id + 100);
  for (auto& b : p) b = static_cast<Byte>(rng());
  return p;
}

// One update log that sets `len` bytes at `off` to `value`, and the page
// it produces.
fd::UpdateLog log_of(std::size_t off, std::size_t len, Byte value) {
  return {fd::Run{static_cast<std::uint16_t>(off), std::vector<Byte>(len, value)}};
}

std::vector<Byte> apply_log(std::vector<Byte> p, const fd::UpdateLog& log) {
  for (const auto& r : log) std::copy(r.data.begin(), r.data.end(), p.begin() + r.offset);
  return p;
}

}  // namespace

// --- OPU ---------------------------------------------------------------------

TEST(OpuDriver, FreshPageCostsOneWrite) {
  fd::OpuDriver opu(config(8, 10));
  opu.load(0, page_of(0));
  EXPECT_EQ(opu.chip().counts(), (fd::OpCounts{0, 1, 0}));
}

TEST(OpuDriver, UpdateIsOneReadAndTwoWrites) {
  fd::OpuDriver opu(config(8, 10));
  for (fd::PageId id = 0; id < 10; ++id) opu.load(id, page_of(id));
  const auto old = *opu.location(3);
  const auto before = opu.chip().counts();
  auto p = opu.read_logical(3);
  p[0] ^= 1;
  opu.write_logical(3, p, {});
  // Program the new copy, set the old copy obsolete.
  EXPECT_EQ(opu.chip().counts() - before, (fd::OpCounts{1, 2, 0}));
  EXPECT_NE(*opu.location(3), old);
  EXPECT_TRUE(opu.chip().peek_spare(old).obsolete);
  EXPECT_EQ(opu.read_logical(3), p);
}

// --- IPU ---------------------------------------------------------------------

TEST(IpuDriver, UpdateRewritesTheWholeBlock) {
  fd::IpuDriver ipu(config(4, 128));
  for (fd::PageId id = 0; id < 128; ++id) ipu.load(id, page_of(id));
  const auto before = ipu.chip().counts();
  const auto ledger_before = ipu.chip().ledger().sim_time;
  auto p = page_of(70);
  p[5] ^= 0xFF;
  ipu.write_logical(70, p, {});
  EXPECT_EQ(ipu.chip().counts() - before, (fd::OpCounts{63, 64, 1}));
  EXPECT_EQ(ipu.chip().ledger().sim_time - ledger_before, 73070u);
  EXPECT_EQ(ipu.location(70), (fd::PhysPageAddr{1, 6}));
  EXPECT_EQ(ipu.read_logical(70), p);
  for (fd::PageId id = 64; id < 128; ++id) {
    if (id != 70) EXPECT_EQ(ipu.read_logical(id), page_of(id)) << id;
  }
}

TEST(IpuDriver, RejectsOversizedDatabase) {
  EXPECT_THROW(fd::IpuDriver(config(1, 65)), fd::FlashError);
}

// --- IPL ---------------------------------------------------------------------

namespace {

struct Ipl {
  fd::IplDriver ipl;
  explicit Ipl(std::size_t log_bytes = fd::kIpl18LogBytes, fd::PageId pages = 110)
      : ipl(config(16, pages), fd::IplLayout::from_log_bytes(log_bytes, fd::FlashGeometry::desk(16))) {
    for (fd::PageId id = 0; id < pages; ++id) ipl.load(id, page_of(id));
  }
};

}  // namespace

TEST(IplDriver, Layouts) {
  Ipl a(fd::kIpl18LogBytes);
  EXPECT_EQ(a.ipl.layout().log_pages_per_block, 9u);
  EXPECT_EQ(a.ipl.originals_per_block(), 55u);
  EXPECT_EQ(a.ipl.log_buffer_bytes(), 128u);
  EXPECT_EQ(a.ipl.name(), "IPL(18KB)");
  Ipl b(fd::kIpl64LogBytes, 64);
  EXPECT_EQ(b.ipl.layout().log_pages_per_block, 32u);
  EXPECT_EQ(b.ipl.originals_per_block(), 32u);
  EXPECT_EQ(b.ipl.name(), "IPL(64KB)");
  EXPECT_THROW(fd::IplLayout::from_log_bytes(1000, fd::FlashGeometry::desk()), fd::FlashError);
}

TEST(IplDriver, SmallLogStaysInMemory) {
  Ipl t;
  const auto before = t.ipl.chip().counts();
  t.ipl.append_log(0, log_of(10, 41, 0xAB));
  EXPECT_EQ(t.ipl.chip().counts() - before, (fd::OpCounts{}));
  EXPECT_EQ(t.ipl.buffered_bytes(0), fd::kRecordHeaderBytes + fd::kRunHeaderBytes + 41);
}

TEST(IplDriver, TwoPagesShareALogPage) {
  Ipl t;
  t.ipl.append_log(0, log_of(10, 20, 1));
  t.ipl.append_log(1, log_of(10, 20, 2));
  auto before = t.ipl.chip().counts();
  t.ipl.flush_log_buffer(0);
  t.ipl.flush_log_buffer(1);
  EXPECT_EQ(t.ipl.chip().counts() - before, (fd::OpCounts{0, 2, 0}));
  EXPECT_EQ(t.ipl.used_slots(0), 2u);
  EXPECT_EQ(t.ipl.written_log_pages(0), 1u);
  const fd::PhysPageAddr log_page{0, t.ipl.originals_per_block()};
  EXPECT_EQ(t.ipl.chip().peek_spare(log_page).type, fd::PageType::kLog);
  EXPECT_EQ(t.ipl.read_logical(0), apply_log(page_of(0), log_of(10, 20, 1)));
  EXPECT_EQ(t.ipl.read_logical(1), apply_log(page_of(1), log_of(10, 20, 2)));
}

// A log of L payload bytes in one run needs ceil(L / (128 - 14 - 4)) slots.
TEST(IplDriver, WritesPerReflectionFollowTheCeilingFormula) {
  for (std::size_t len : {1, 50, 110, 111, 220, 221, 500, 1000}) {
    Ipl t;
    const auto before = t.ipl.chip().counts();
    const auto log = log_of(0, len, 0x11);
    t.ipl.write_logical(2, apply_log(page_of(2), log), std::span<const fd::UpdateLog>(&log, 1));
    const std::size_t payload = 128 - fd::kRecordHeaderBytes - fd::kRunHeaderBytes;
    const std::size_t expected = (len + payload - 1) / payload;
    EXPECT_EQ((t.ipl.chip().counts() - before).writes, expected) << len;
    EXPECT_EQ(t.ipl.read_logical(2), apply_log(page_of(2), log));
  }
}

TEST(IplDriver, ReadCostsOnePlusWrittenLogPages) {
  Ipl t;
  // 20 slots of unit 0 spread over two log pages.
  for (int i = 0; i < 20; ++i) {
    const auto log = log_of(static_cast<std::size_t>(i) * 8, 8, static_cast<Byte>(i));
    t.ipl.append_log(0, log);
    t.ipl.flush_log_buffer(0);
  }
  EXPECT_EQ(t.ipl.written_log_pages(0), 2u);
  auto before = t.ipl.chip().counts();
  t.ipl.read_logical(54);
  EXPECT_EQ((t.ipl.chip().counts() - before).reads, 3u);
  // Unit 1 has no logs.
  before = t.ipl.chip().counts();
  t.ipl.read_logical(55);
  EXPECT_EQ((t.ipl.chip().counts() - before).reads, 1u);
}

TEST(IplDriver, MergeWhenLogRegionIsFull) {
  Ipl t;
  auto expect0 = page_of(0);
  const std::uint32_t slots = t.ipl.slots_per_unit();
  ASSERT_EQ(slots, 144u);
  for (std::uint32_t i = 0; i < slots; ++i) {
    const auto log = log_of(i % 2000, 4, static_cast<Byte>(i));
    expect0 = apply_log(expect0, log);
    t.ipl.append_log(0, log);
    t.ipl.flush_log_buffer(0);
  }
  EXPECT_EQ(t.ipl.used_slots(0), slots);
  EXPECT_EQ(t.ipl.stats().merges, 0u);
  const auto old_block = t.ipl.original_location(0).block;

  const auto before = t.ipl.chip().counts();
  const auto log = log_of(0, 4, 0xEE);
  expect0 = apply_log(expect0, log);
  t.ipl.append_log(0, log);
  t.ipl.flush_log_buffer(0);
  const auto merge = t.ipl.stats().maintenance;
  // Read 9 log pages and 55 originals, program 55 originals, erase once.
  EXPECT_EQ(merge, (fd::OpCounts{9 + 55, 55, 1}));
  EXPECT_EQ(t.ipl.chip().counts() - before, (merge + fd::OpCounts{0, 1, 0}));
  EXPECT_EQ(t.ipl.stats().merges, 1u);
  EXPECT_NE(t.ipl.original_location(0).block, old_block);
  EXPECT_EQ(t.ipl.used_slots(0), 1u);
  EXPECT_EQ(t.ipl.read_logical(0), expect0);
  for (fd::PageId id = 1; id < 55; ++id) EXPECT_EQ(t.ipl.read_logical(id), page_of(id));

  // Right after a merge, a page without new logs costs one read.
  t.ipl.merge_unit(0);
  const auto read_before = t.ipl.chip().counts();
  EXPECT_EQ(t.ipl.read_logical(0), expect0);
  EXPECT_EQ((t.ipl.chip().counts() - read_before).reads, 1u);
}

TEST(IplDriver, WriteThroughFlushesEveryBuffer) {
  Ipl t;
  t.ipl.append_log(3, log_of(0, 10, 1));
  t.ipl.append_log(70, log_of(0, 10, 1));
  const auto before = t.ipl.chip().counts();
  t.ipl.write_through();
  EXPECT_EQ(t.ipl.chip().counts() - before, (fd::OpCounts{0, 2, 0}));
  EXPECT_EQ(t.ipl.buffered_bytes(3), 0u);
  EXPECT_EQ(t.ipl.buffered_bytes(70), 0u);
}

TEST(IplDriver, CapacityIsChecked) {
  // 16 blocks hold 15 units of 55 pages plus the merge block.
  EXPECT_NO_THROW(fd::IplDriver(config(16, 15 * 55),
                                fd::IplLayout::from_log_bytes(fd::kIpl18LogBytes,
                                                              fd::FlashGeometry::desk(16))));
  EXPECT_THROW(fd::IplDriver(config(16, 15 * 55 + 1),
                             fd::IplLayout::from_log_bytes(fd::kIpl18LogBytes,
                                                           fd::FlashGeometry::desk(16))),
               fd::FlashError);
}

// --- all drivers ---------------------------------------------------------------

class EveryDriver : public ::testing::TestWithParam<fd::DriverKind> {};

// A random update workload where every read is checked against a shadow
// copy of the database.
TEST_P(EveryDriver, MatchesShadowCopy) {
  const auto kind = GetParam();
  const fd::PageId pages = 600;
  fd::Workbench bench(kind, config(32, pages), 5);
  fd::WorkloadParams params;
  params.db_pages = pages;
  params.n_updates_till_write = 3;
  params.pct_update_ops = 80;
  params.seed = 9;
  fd::WorkloadGenerator gen(params);
  const std::uint64_t ops = kind == fd::DriverKind::kIpu ? 300 : 4000;
  const auto tally = bench.run(gen, ops);
  EXPECT_EQ(tally.ops, ops);
  bench.driver().write_through();
  bench.verify_all();
}

INSTANTIATE_TEST_SUITE_P(
    Drivers, EveryDriver, ::testing::ValuesIn(fd::all_driver_kinds()),
    [](const ::testing::TestParamInfo<fd::DriverKind>& info) {
      return fd::driver_cli_name(info.param);
    });

TEST(DriverKinds, ParseAndLabel) {
  EXPECT_EQ(fd::parse_driver_kind("pdl256"), fd::DriverKind::kPdl256);
  EXPECT_EQ(fd::parse_driver_kind("PDL(2KB)"), fd::DriverKind::kPdl2k);
  EXPECT_EQ(fd::parse_driver_kind("ipl64"), fd::DriverKind::kIpl64);
  EXPECT_EQ(fd::driver_label(fd::DriverKind::kIpl18), "IPL(18KB)");
  EXPECT_THROW(fd::parse_driver_kind("nosuch"), fd::FlashError);
  EXPECT_EQ(fd::all_driver_kinds().size(), 6u);
}
