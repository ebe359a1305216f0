#pragma once

// Bit-accurate NAND flash emulator.
//
// Every page has a data area and a spare area. Programming can only clear
// bits (1 -> 0); erasing a block sets every bit of every page back to 1.
// The chip never sleeps: each operation adds its nominal latency to a
// simulated-time ledger, which is the cost measure the drivers are compared on.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flashdiff {

using Byte = std::uint8_t;
using Micros = std::uint64_t;

inline constexpr Byte kErasedByte = 0xFF;

struct FlashGeometry {
  std::uint32_t n_blocks = 32768;
  std::uint32_t pages_per_block = 64;
  std::uint32_t data_bytes = 2048;
  std::uint32_t spare_bytes = 64;

  // Samsung K9L8G08U0M 2 GiB MLC profile.
  static FlashGeometry table1() { return {}; }
  // Same page/block shape, 256 blocks (32 MiB of data).
  static FlashGeometry desk(std::uint32_t blocks = 256) {
    FlashGeometry g;
    g.n_blocks = blocks;
    return g;
  }

  std::uint64_t total_pages() const {
    return std::uint64_t{n_blocks} * pages_per_block;
  }
  std::uint32_t page_bytes() const { return data_bytes + spare_bytes; }
  std::uint64_t block_bytes() const {
    return std::uint64_t{pages_per_block} * page_bytes();
  }
  std::uint64_t data_capacity() const { return total_pages() * data_bytes; }

  // Throws kInvalidArgument on zero fields or layouts the on-flash
  // formats cannot address (2-byte offsets, 14-byte spare layout).
  void validate() const;

  friend bool operator==(const FlashGeometry&, const FlashGeometry&) = default;
};

struct TimingProfile {
  Micros t_read = 110;
  Micros t_write = 1010;
  Micros t_erase = 1500;

  static TimingProfile table1() { return {}; }
  void validate() const;

  friend bool operator==(const TimingProfile&, const TimingProfile&) = default;
};

struct PhysPageAddr {
  std::uint32_t block = 0;
  std::uint32_t page = 0;

  friend auto operator<=>(const PhysPageAddr&, const PhysPageAddr&) = default;
};

std::string to_string(PhysPageAddr addr);

enum class PageType : Byte {
  kBase = 0x01,
  kDifferential = 0x02,
  kOriginal = 0x03,
  kLog = 0x04,
  kData = 0x05,
  kFree = 0xFF,
};

const char* to_string(PageType type);

// Decoded spare area. On flash the layout is fixed:
//   [0] type tag, [1..4] physical page id (LE), [5..12] creation timestamp
//   (LE), [13] obsolete flag (0xFF valid, 0x00 obsolete), rest reserved.
struct SpareArea {
  PageType type = PageType::kFree;
  std::optional<std::uint32_t> page_id;
  std::optional<std::uint64_t> timestamp;
  bool obsolete = false;

  static constexpr std::size_t kTypeOffset = 0;
  static constexpr std::size_t kPageIdOffset = 1;
  static constexpr std::size_t kTimestampOffset = 5;
  static constexpr std::size_t kObsoleteOffset = 13;
  static constexpr std::size_t kEncodedBytes = 14;

  void encode(std::span<Byte> spare) const;
  static SpareArea decode(std::span<const Byte> spare);

  friend bool operator==(const SpareArea&, const SpareArea&) = default;
};

struct ChipLedger {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;        // includes spare-only programs
  std::uint64_t spare_writes = 0;  // subset of writes
  std::uint64_t erases = 0;
  Micros sim_time = 0;
  std::vector<std::uint64_t> erase_count_per_block;

  Micros cost(const TimingProfile& t) const {
    return reads * t.t_read + writes * t.t_write + erases * t.t_erase;
  }
};

// Op counters only; cheap to copy and subtract.
struct OpCounts {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t erases = 0;

  Micros cost(const TimingProfile& t) const {
    return reads * t.t_read + writes * t.t_write + erases * t.t_erase;
  }
  OpCounts& operator+=(const OpCounts& o) {
    reads += o.reads;
    writes += o.writes;
    erases += o.erases;
    return *this;
  }
  friend OpCounts operator-(OpCounts a, const OpCounts& b) {
    a.reads -= b.reads;
    a.writes -= b.writes;
    a.erases -= b.erases;
    return a;
  }
  friend OpCounts operator+(OpCounts a, const OpCounts& b) { return a += b; }
  friend bool operator==(const OpCounts&, const OpCounts&) = default;
};

// Flat byte image of every cell on the chip, in block/page order with each
// page stored as data followed by spare.
struct ChipImage {
  FlashGeometry geometry;
  std::vector<Byte> cells;

  friend bool operator==(const ChipImage&, const ChipImage&) = default;
};

// Image files: 16-byte little-endian header
//   "FDIF" | u16 version | u16 pages_per_block | u32 n_blocks |
//   u16 data_bytes | u16 spare_bytes
// followed by ChipImage::cells verbatim.
inline constexpr std::uint16_t kImageVersion = 1;
inline constexpr std::size_t kImageHeaderBytes = 16;

void save_image(const ChipImage& image, const std::filesystem::path& path);
ChipImage load_image(const std::filesystem::path& path);

class FlashChip {
 public:
  FlashChip(FlashGeometry geometry, TimingProfile timing);
  // Rebuilds a chip from an image. Ledger and spare-write counters start at
  // zero; the image carries cell contents only.
  FlashChip(const ChipImage& image, TimingProfile timing);

  const FlashGeometry& geometry() const { return geometry_; }
  const TimingProfile& timing() const { return timing_; }
  const ChipLedger& ledger() const { return ledger_; }
  OpCounts counts() const {
    return {ledger_.reads, ledger_.writes, ledger_.erases};
  }

  // Copies the page into `data` (data_bytes long) and returns its spare.
  SpareArea read_page(PhysPageAddr addr, std::span<Byte> data);
  std::vector<Byte> read_page(PhysPageAddr addr, SpareArea* spare = nullptr);

  // Programs the full data area and the spare fields. Every requested bit
  // must already be set in the cells, otherwise kOverwriteViolation.
  void write_page(PhysPageAddr addr, std::span<const Byte> data,
                  const SpareArea& spare);

  // Programs `bytes` at `offset` inside the data area and leaves everything
  // else untouched (partial-page program). Costs one write.
  void program_partial(PhysPageAddr addr, std::size_t offset,
                       std::span<const Byte> bytes);

  // Clears the obsolete flag with a spare-only program. Each call costs one
  // write and counts toward the four-program spare limit, even if the flag
  // is already clear.
  void set_obsolete(PhysPageAddr addr);

  void erase_block(std::uint32_t block);

  // --- uncharged inspection, for oracles, GC bookkeeping and tests ---
  std::span<const Byte> peek_data(PhysPageAddr addr) const;
  SpareArea peek_spare(PhysPageAddr addr) const;
  bool is_programmed(PhysPageAddr addr) const;
  std::uint32_t spare_write_count(PhysPageAddr addr) const;
  std::uint32_t obsolete_pages(std::uint32_t block) const {
    return obsolete_in_block_.at(block);
  }
  std::uint32_t programmed_pages(std::uint32_t block) const {
    return programmed_in_block_.at(block);
  }

  ChipImage image() const { return {geometry_, cells_}; }

  // Crash injection: after `mutations` more writes/erases complete, the
  // next mutating call throws CrashInjected without touching the cells.
  void arm_crash(std::uint64_t mutations);
  void disarm_crash() { crash_at_.reset(); }
  std::uint64_t mutation_count() const { return mutations_; }

  static constexpr std::uint32_t kSpareWriteLimit = 4;

 private:
  std::size_t page_index(PhysPageAddr addr) const;
  Byte* data_ptr(std::size_t index);
  const Byte* data_ptr(std::size_t index) const;
  Byte* spare_ptr(std::size_t index);
  const Byte* spare_ptr(std::size_t index) const;
  void check_block(std::uint32_t block) const;
  void begin_mutation();
  void program_bytes(Byte* cells, std::span<const Byte> request,
                     PhysPageAddr addr, const char* area);
  void note_programmed(std::size_t index, PhysPageAddr addr);

  FlashGeometry geometry_;
  TimingProfile timing_;
  ChipLedger ledger_;
  std::vector<Byte> cells_;
  std::vector<std::uint8_t> spare_writes_;  // spare-only programs since erase
  std::vector<bool> programmed_;
  std::vector<std::uint32_t> obsolete_in_block_;
  std::vector<std::uint32_t> programmed_in_block_;
  std::uint64_t mutations_ = 0;
  std::optional<std::uint64_t> crash_at_;
};

}  // namespace flashdiff
