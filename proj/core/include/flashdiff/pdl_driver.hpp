#pragma once

// Page-differential logging.
//
// Each logical page lives in at most two physical pages: a base page holding
// a full (possibly stale) copy, and a differential page holding the bytes in
// which the current image differs from that base. Differentials of many
// logical pages share one differential page. They are computed only when a
// page is reflected to flash, collected in a one-page write buffer, and the
// buffer is programmed when the next differential no longer fits.
//
// Guarantees checked by the test suites:
//   * a read touches at most two physical pages;
//   * reflecting a page programs at most one page on its behalf;
//   * after write_through() a chip scan rebuilds the in-memory tables.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "flashdiff/diff_codec.hpp"
#include "flashdiff/driver.hpp"
#include "flashdiff/gc.hpp"

namespace flashdiff {

struct MappingEntry {
  PhysPageAddr base;
  std::uint64_t base_ts = 0;
  std::optional<PhysPageAddr> differential;
  std::uint64_t differential_ts = 0;  // meaningful when differential is set

  friend bool operator==(const MappingEntry&, const MappingEntry&) = default;
};

// physical page id -> <base page, differential page>
using PageMappingTable = std::map<PageId, MappingEntry>;
// differential page -> number of valid differentials it holds
using ValidDifferentialCountTable = std::map<PhysPageAddr, std::uint32_t>;

inline constexpr std::size_t kPdl2kMaxDifferential = 2048;
inline constexpr std::size_t kPdl256MaxDifferential = 256;

class PdlDriver final : public Driver, private GcClient {
 public:
  PdlDriver(const DriverConfig& config, DiffBudget budget);

  // Resumes on a chip whose tables were rebuilt by recover(). The next
  // timestamp continues after `max_timestamp`.
  PdlDriver(const DriverConfig& config, DiffBudget budget, FlashChip chip,
            const PageMappingTable& mapping, std::uint64_t max_timestamp);

  PdlDriver(const PdlDriver& other);
  PdlDriver& operator=(const PdlDriver&) = delete;

  std::string name() const override;
  std::unique_ptr<Driver> clone() const override;
  void load(PageId id, std::span<const Byte> page) override;
  std::vector<Byte> read_logical(PageId id) override;
  void write_logical(PageId id, std::span<const Byte> page,
                     std::span<const UpdateLog> logs) override;
  void write_through() override;
  DriverStats stats() const override;

  // Reflects `page`: read the base, diff, then buffer the differential,
  // flush-and-buffer it, or write a new base page when it is too large.
  void pdl_write(PageId id, std::span<const Byte> page);
  // Base page merged with the buffered or flushed differential.
  std::vector<Byte> pdl_read(PageId id);
  // Programs the write buffer into a fresh differential page.
  void flush_buffer();
  void write_new_base(PageId id, std::span<const Byte> page);
  void decrease_valid_count(std::optional<PhysPageAddr> page);

  const DiffBudget& budget() const { return budget_; }
  const std::optional<MappingEntry>& mapping(PageId id) const;
  PageMappingTable mapping_table() const;
  ValidDifferentialCountTable valid_counts() const;
  std::uint32_t valid_count(PhysPageAddr page) const;

  std::size_t buffered_differentials() const { return buffer_.size(); }
  std::size_t buffered_bytes() const { return buffer_bytes_; }
  const Differential* buffered(PageId id) const;
  std::uint64_t next_timestamp() const { return next_ts_; }

  // Throws kCorruption if the count table disagrees with the mapping table
  // or the buffer index is inconsistent.
  void check_invariants() const;

 private:
  void relocate(PhysPageAddr from, std::span<const Byte> data,
                const SpareArea& spare, RelocationTarget& to) override;
  void finish_relocation(RelocationTarget& to) override;

  std::size_t page_index(PhysPageAddr addr) const;
  PhysPageAddr allocate();
  void remove_buffered(PageId id);
  void append_buffered(Differential d);
  void write_compaction_page(RelocationTarget& to);

  DiffBudget budget_;
  std::vector<std::optional<MappingEntry>> mapping_;
  std::vector<std::uint32_t> valid_counts_;  // by flat page index
  std::vector<Differential> buffer_;
  std::vector<std::int32_t> buffer_slot_;  // id -> index into buffer_, -1 if none
  std::size_t buffer_bytes_ = 0;
  std::uint64_t next_ts_ = 1;

  PageAllocator allocator_;
  GarbageCollector gc_;

  // Valid differentials gathered from GC victims, not yet programmed.
  std::vector<std::pair<Differential, PhysPageAddr>> compaction_;
  std::size_t compaction_bytes_ = 0;

  std::uint64_t case1_ = 0;
  std::uint64_t case2_ = 0;
  std::uint64_t case3_ = 0;
  std::uint64_t flushes_ = 0;
};

}  // namespace flashdiff
