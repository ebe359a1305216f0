#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "flashdiff/diff_codec.hpp"
#include "flashdiff/flash_chip.hpp"

namespace flashdiff {

using PageId = std::uint32_t;

// Changes made by a single update command: (offset, new bytes) regions.
using UpdateLog = std::vector<Run>;

struct DriverStats {
  std::string name;
  OpCounts chip;             // everything the chip executed
  std::uint64_t spare_writes = 0;
  OpCounts maintenance;      // subset of `chip` spent in GC or block merging
  std::uint64_t gc_invocations = 0;
  std::uint64_t merges = 0;
  std::uint64_t logical_reads = 0;
  std::uint64_t logical_writes = 0;
  // PDL write-path breakdown (zero for the other drivers).
  std::uint64_t diff_case1 = 0;
  std::uint64_t diff_case2 = 0;
  std::uint64_t diff_case3 = 0;
  std::uint64_t buffer_flushes = 0;
};

struct DriverConfig {
  FlashGeometry geometry = FlashGeometry::desk();
  TimingProfile timing = TimingProfile::table1();
  PageId logical_pages = 0;  // ids 0 .. logical_pages-1
};

// Page-update method sitting between a page-oriented storage client and the
// chip. Logical pages are data_bytes long. Operations are not reentrant; a
// driver may change threads between calls.
class Driver {
 public:
  virtual ~Driver() = default;

  virtual std::string name() const = 0;
  virtual std::unique_ptr<Driver> clone() const = 0;

  // Initial population of a page that has never been written.
  virtual void load(PageId id, std::span<const Byte> page) = 0;

  virtual std::vector<Byte> read_logical(PageId id) = 0;

  // Reflects an updated page. `logs` carries the update commands applied
  // since the page was read; only log-based methods consume them, the
  // others diff or copy `page` itself.
  virtual void write_logical(PageId id, std::span<const Byte> page,
                             std::span<const UpdateLog> logs) = 0;

  // Forces anything buffered in memory onto the chip.
  virtual void write_through() = 0;

  virtual DriverStats stats() const = 0;

  FlashChip& chip() { return chip_; }
  const FlashChip& chip() const { return chip_; }
  PageId logical_pages() const { return logical_pages_; }

 protected:
  explicit Driver(const DriverConfig& config)
      : chip_(config.geometry, config.timing),
        logical_pages_(config.logical_pages) {}
  Driver(const Driver&) = default;
  Driver& operator=(const Driver&) = default;

  void check_id(PageId id) const;
  void check_page(std::span<const Byte> page) const;
  DriverStats base_stats() const;

  FlashChip chip_;
  PageId logical_pages_;
  std::uint64_t logical_reads_ = 0;
  std::uint64_t logical_writes_ = 0;
};

// Driver names accepted on the command line.
enum class DriverKind { kPdl256, kPdl2k, kOpu, kIpu, kIpl18, kIpl64 };

std::string driver_label(DriverKind kind);    // "PDL(256B)", "IPL(18KB)", ...
std::string driver_cli_name(DriverKind kind); // "pdl256", "ipl18", ...
DriverKind parse_driver_kind(const std::string& name);  // either spelling
const std::vector<DriverKind>& all_driver_kinds();

std::unique_ptr<Driver> make_driver(DriverKind kind, const DriverConfig& config);

}  // namespace flashdiff
