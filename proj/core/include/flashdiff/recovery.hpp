#pragma once

// Rebuilding PDL's in-memory tables from a chip after a failure, and the
// crash-injection hook used to produce such chips.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "flashdiff/driver.hpp"
#include "flashdiff/pdl_driver.hpp"

namespace flashdiff {

struct RecoveryResult {
  PageMappingTable mapping;
  ValidDifferentialCountTable valid_counts;
  std::uint64_t max_timestamp = 0;
  std::uint64_t pages_scanned = 0;
  std::uint64_t pages_obsoleted = 0;  // losers marked during this run
  OpCounts ops;                        // chip operations the scan issued
  std::vector<std::string> warnings;
};

// Scans every page in block/page order, keeps the newest base page of each
// logical page and the newest differential that is newer than that base,
// and marks everything else obsolete on the chip. Running it again on the
// same chip finds nothing left to mark.
RecoveryResult recover(FlashChip& chip);

// Simulated time of the scan: every page is read once.
Micros scan_cost(const FlashGeometry& geometry, const TimingProfile& timing);
Micros scan_cost(const ChipImage& image, const TimingProfile& timing);

// Page content implied by a recovered mapping entry. Uses uncharged peeks.
std::vector<Byte> materialize(const FlashChip& chip, PageId id,
                              const MappingEntry& entry);

struct CrashOutcome {
  bool crashed = false;
  std::uint64_t completed_mutations = 0;  // counted from the arming call
  ChipImage image;
};

// Arms the driver's chip to lose power before its `crash_point`-th next
// mutation (0 = before the first), runs `script`, and returns the chip
// image as of the last completed operation. In-memory driver state is
// meaningless afterwards.
CrashOutcome inject_crash(Driver& driver, std::uint64_t crash_point,
                          const std::function<void(Driver&)>& script);

// Scripted mixed workload for crash testing: reads and updates of varied
// size (so every write case and GC occur) with a write-through every
// `write_through_every` operations.
struct CrashScript {
  std::uint64_t seed = 7;
  std::uint32_t db_pages = 150;
  std::uint32_t ops = 500;
  std::uint32_t write_through_every = 50;

  // 8 blocks of 64 pages: small enough that the script collects garbage.
  static FlashGeometry geometry() { return FlashGeometry::desk(8); }
  DriverConfig driver_config() const;

  class Observer {
   public:
    virtual ~Observer() = default;
    virtual void on_write(PageId /*id*/, std::span<const Byte> /*page*/) {}
    virtual void on_write_through() {}
  };

  // Loads the database and forces it to flash.
  void load(Driver& driver) const;
  void run(Driver& driver, Observer* observer) const;
};

}  // namespace flashdiff
