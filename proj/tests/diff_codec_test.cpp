#include "flashdiff/diff_codec.hpp"

#include <random>
#include <string>

#include <gtest/gtest.h>

#include "flashdiff/errors.hpp"

namespace fd = flashdiff;
using fd::Byte;

namespace {

constexpr std::size_t kPage = 2048;

std::vector<Byte> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

std::vector<Byte> random_page(std::mt19937_64& rng) {
  std::vector<Byte> p(kPage);
  for (auto& b : p) b = static_cast<Byte>(rng());
  return p;
}

// A random edit of `base`: a few runs of random length at random places,
// sometimes rewriting a byte with its old value.
std::vector<Byte> mutate(const std::vector<Byte>& base, std::mt19937_64& rng) {
  auto out = base;
  const int runs = static_cast<int>(rng() % 12);
  for (int r = 0; r < runs; ++r) {
    const std::size_t len = 1 + rng() % (rng() % 4 == 0 ? 600 : 24);
    const std::size_t off = rng() % (kPage - std::min(len, kPage - 1));
    for (std::size_t i = off; i < std::min(kPage, off + len); ++i) {
      out[i] = rng() % 8 == 0 ? base[i] : static_cast<Byte>(rng());
    }
  }
  return out;
}

}  // namespace

TEST(DiffCodec, EqualPagesGiveEmptyDifferential) {
  std::vector<Byte> page(kPage, 0x33);
  const auto d = fd::compute_differential(page, page, 7, 3);
  EXPECT_TRUE(d.empty());
  EXPECT_EQ(d.page_id, 7u);
  EXPECT_EQ(d.timestamp, 3u);
}

// "...aaaaaa..." updated twice to "...bcccba...": only the net difference
// "bcccb" is kept, as one run.
TEST(DiffCodec, OverlappingUpdatesCollapseToNetDifference) {
  auto base = bytes_of(std::string(kPage, '.'));
  for (std::size_t i = 100; i < 106; ++i) base[i] = 'a';
  auto current = base;
  for (std::size_t i = 100; i < 105; ++i) current[i] = 'b';  // first update "bbbbb"
  for (std::size_t i = 101; i < 104; ++i) current[i] = 'c';  // second update "ccc"
  const auto d = fd::compute_differential(base, current, 1, 1);
  ASSERT_EQ(d.runs.size(), 1u);
  EXPECT_EQ(d.runs[0].offset, 100);
  EXPECT_EQ(d.runs[0].data, bytes_of("bcccb"));
}

TEST(DiffCodec, GapsShorterThanARunHeaderAreCoalesced) {
  std::vector<Byte> base(kPage, 0);
  auto close = base;
  close[10] = 1;
  close[14] = 1;  // gap of 3 equal bytes
  auto d = fd::compute_differential(base, close, 0, 0);
  ASSERT_EQ(d.runs.size(), 1u);
  EXPECT_EQ(d.runs[0].offset, 10);
  EXPECT_EQ(d.runs[0].data.size(), 5u);

  auto apart = base;
  apart[10] = 1;
  apart[15] = 1;  // gap of 4: a second run costs the same as coalescing
  d = fd::compute_differential(base, apart, 0, 0);
  EXPECT_EQ(d.runs.size(), 2u);
}

TEST(DiffCodec, EncodedSizes) {
  fd::Differential d;
  EXPECT_EQ(fd::encoded_size(d), 14u);
  d.runs.push_back({10, bytes_of("hello")});
  EXPECT_EQ(fd::encoded_size(d), 23u);
  EXPECT_EQ(fd::encode(d).size(), 23u);
  const auto before = fd::encoded_size(d);
  d.runs.push_back({100, bytes_of("x")});
  EXPECT_GT(fd::encoded_size(d), before);
}

TEST(DiffCodec, WireFormatIsLittleEndian) {
  fd::Differential d{0x01020304, 0x1122334455667788ULL, {{0x0A0B, bytes_of("Z")}}};
  const std::vector<Byte> expected = {0x04, 0x03, 0x02, 0x01,                          // pid
                                      0x88, 0x77, 0x66, 0x55, 0x44, 0x33, 0x22, 0x11,  // ts
                                      0x01, 0x00,                                      // runs
                                      0x0B, 0x0A, 0x01, 0x00, 'Z'};
  EXPECT_EQ(fd::encode(d), expected);
}

TEST(DiffCodec, ApplyEmptyAndFullPage) {
  std::mt19937_64 rng(1);
  const auto base = random_page(rng);
  fd::Differential empty;
  EXPECT_EQ(fd::apply_differential(base, empty), base);
  const auto other = random_page(rng);
  fd::Differential full{0, 0, {{0, other}}};
  EXPECT_EQ(fd::apply_differential(base, full), other);
}

TEST(DiffCodec, ApplyRejectsRunsOutsideThePage) {
  std::vector<Byte> base(kPage, 0);
  fd::Differential d{0, 0, {{2046, bytes_of("abc")}}};
  try {
    fd::apply_differential(base, d);
    FAIL();
  } catch (const fd::FlashError& e) {
    EXPECT_EQ(e.code(), fd::ErrorCode::kCorruption);
  }
}

// Property: apply(compute(b, c)) == c, runs are normalized, and only
// differing bytes or short gaps are covered.
TEST(DiffCodec, RoundTripOverTenThousandRandomPairs) {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 10000; ++trial) {
    const auto base = random_page(rng);
    const auto current = mutate(base, rng);
    const auto d = fd::compute_differential(base, current, trial, trial);
    ASSERT_EQ(fd::apply_differential(base, d), current) << trial;
    // Idempotent.
    ASSERT_EQ(fd::apply_differential(fd::apply_differential(base, d), d), current);
    std::size_t prev_end = 0;
    for (std::size_t r = 0; r < d.runs.size(); ++r) {
      const auto& run = d.runs[r];
      ASSERT_FALSE(run.data.empty());
      ASSERT_LE(run.end(), kPage);
      if (r > 0) ASSERT_GE(run.offset, prev_end + fd::kRunHeaderBytes);
      ASSERT_NE(base[run.offset], current[run.offset]);
      ASSERT_NE(base[run.end() - 1], current[run.end() - 1]);
      // Inside a run, equal bytes only appear in gaps shorter than a header.
      std::size_t equal_streak = 0;
      for (std::size_t i = run.offset; i < run.end(); ++i) {
        equal_streak = base[i] == current[i] ? equal_streak + 1 : 0;
        ASSERT_LT(equal_streak, fd::kRunHeaderBytes);
      }
      prev_end = run.end();
    }
    // Outside the runs nothing differs.
    std::vector<bool> covered(kPage, false);
    for (const auto& run : d.runs) {
      for (std::size_t i = run.offset; i < run.end(); ++i) covered[i] = true;
    }
    for (std::size_t i = 0; i < kPage; ++i) {
      if (!covered[i]) ASSERT_EQ(base[i], current[i]);
    }
  }
}

TEST(DiffCodec, EncodeDecodeRoundTripWithPadding) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<fd::Differential> ds;
    std::vector<Byte> page;
    for (int k = 0; k < 3; ++k) {
      const auto base = random_page(rng);
      auto d = fd::compute_differential(base, mutate(base, rng), trial * 3 + k, rng());
      if (page.size() + fd::encoded_size(d) > kPage) break;
      fd::encode_append(d, page);
      ds.push_back(std::move(d));
    }
    page.resize(kPage, fd::kErasedByte);
    ASSERT_EQ(fd::decode(page, kPage), ds);
    for (const auto& d : ds) {
      const auto found = fd::decode_find(page, kPage, d.page_id);
      ASSERT_TRUE(found.has_value());
      ASSERT_EQ(*found, d);
    }
  }
}

TEST(DiffCodec, ErasedPageDecodesToNothing) {
  const std::vector<Byte> erased(kPage, 0xFF);
  EXPECT_TRUE(fd::decode(erased, kPage).empty());
  EXPECT_FALSE(fd::decode_find(erased, kPage, 0).has_value());
}

TEST(DiffCodec, TwoPagesShareOneDifferentialPage) {
  fd::Differential a{1, 5, {{0, bytes_of("one")}}};
  fd::Differential b{2, 5, {{300, bytes_of("two")}}};
  std::vector<Byte> page;
  fd::encode_append(a, page);
  fd::encode_append(b, page);
  page.resize(kPage, 0xFF);
  const auto all = fd::decode(page, kPage);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0], a);
  EXPECT_EQ(all[1], b);
}

TEST(DiffCodec, DecodeMatchingKeepsFlashOrder) {
  fd::Differential a{4, 1, {{0, bytes_of("a")}}};
  fd::Differential b{9, 2, {{0, bytes_of("b")}}};
  fd::Differential c{4, 3, {{0, bytes_of("c")}}};
  std::vector<Byte> page;
  for (const auto* d : {&a, &b, &c}) fd::encode_append(*d, page);
  page.resize(kPage, 0xFF);
  std::vector<fd::Differential> out;
  fd::decode_matching(page, kPage, 4, out);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], a);
  EXPECT_EQ(out[1], c);
}

TEST(DiffCodec, MalformedInputIsADecodeError) {
  fd::Differential d{1, 1, {{10, bytes_of("abcdef")}}};
  auto bytes = fd::encode(d);
  // Truncated run payload.
  std::vector<Byte> truncated(bytes.begin(), bytes.end() - 3);
  EXPECT_THROW(fd::decode(truncated, kPage), fd::FlashError);
  // Run that leaves the page.
  auto outside = bytes;
  outside[14] = 0xFF;
  outside[15] = 0x07;  // offset 2047 with length 6
  outside.resize(kPage, 0xFF);
  try {
    fd::decode(outside, kPage);
    FAIL();
  } catch (const fd::FlashError& e) {
    EXPECT_EQ(e.code(), fd::ErrorCode::kDecode);
  }
  // Zero-length run.
  auto empty_run = bytes;
  empty_run[16] = 0;
  empty_run[17] = 0;
  EXPECT_THROW(fd::decode(empty_run, kPage), fd::FlashError);
}

TEST(DiffBudget, Validation) {
  EXPECT_NO_THROW(fd::DiffBudget{256}.validate(kPage));
  EXPECT_NO_THROW(fd::DiffBudget{2048}.validate(kPage));
  EXPECT_THROW(fd::DiffBudget{0}.validate(kPage), fd::FlashError);
  EXPECT_THROW(fd::DiffBudget{4096}.validate(kPage), fd::FlashError);
}
