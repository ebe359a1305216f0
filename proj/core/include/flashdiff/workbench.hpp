#pragma once

// A driver loaded with a database, plus the shadow copy every read is
// checked against. Running operations tallies chip work per step.

#include <cstdint>
#include <memory>
#include <vector>

#include "flashdiff/driver.hpp"
#include "flashdiff/errors.hpp"
#include "flashdiff/workload.hpp"

namespace flashdiff {

// Chip work split by step. `maintenance` (GC or merging) is part of
// `write_step`.
struct Tally {
  std::uint64_t ops = 0;
  std::uint64_t updates = 0;
  std::uint64_t reflections = 0;  // write_logical calls
  OpCounts read_step;
  OpCounts write_step;
  OpCounts maintenance;

  OpCounts total() const { return read_step + write_step; }
  Tally& operator+=(const Tally& o);
};

// Thrown when a driver returns something other than the shadow copy, or a
// PDL principle audit fails.
class OracleMismatch : public FlashError {
 public:
  explicit OracleMismatch(const std::string& what)
      : FlashError(ErrorCode::kCorruption, what) {}
};

class Workbench {
 public:
  // Creates the driver and loads db_pages pages of deterministic content.
  Workbench(DriverKind kind, const DriverConfig& config, std::uint64_t seed);
  Workbench(const Workbench& other);
  Workbench& operator=(const Workbench&) = delete;

  DriverKind kind() const { return kind_; }
  Driver& driver() { return *driver_; }
  const Driver& driver() const { return *driver_; }
  const std::vector<Byte>& shadow(PageId id) const { return shadow_.at(id); }
  PageId db_pages() const { return static_cast<PageId>(shadow_.size()); }

  // Reads (and for updates, changes and writes back) `op.page`.
  void execute(const Operation& op, Tally& tally);
  // Runs `count` operations from `gen`.
  Tally run(WorkloadGenerator& gen, std::uint64_t count);

  // Page-level access for buffered clients (TPC-C-lite).
  std::vector<Byte> read_page(PageId id, Tally& tally);
  void write_page(PageId id, std::span<const Byte> page,
                  std::span<const UpdateLog> logs, Tally& tally);

  // Reads every page through the driver (uncounted in any tally) and
  // compares with the shadow copy.
  void verify_all();

  // PDL principle audit counters: reads per read_logical and data pages
  // programmed per reflection, excluding GC.
  std::uint64_t max_reads_per_read() const { return max_reads_per_read_; }
  std::uint64_t max_pages_per_reflection() const { return max_pages_per_reflection_; }

 private:
  DriverKind kind_;
  std::unique_ptr<Driver> driver_;
  std::vector<std::vector<Byte>> shadow_;
  std::uint64_t max_reads_per_read_ = 0;
  std::uint64_t max_pages_per_reflection_ = 0;
};

}  // namespace flashdiff
