#pragma once

// In-page logging. Each block is split into original pages and log pages.
// Update logs of a logical page are collected in a small per-page buffer and
// written into a log slot of the block holding the page's original; a read
// merges the original with every log written in that block. When a block has
// no free log slot, its originals are merged with the logs and rewritten to a
// fresh block.
//
// A log page is divided into slots the size of a log buffer (1/16 of a
// page). Writing one buffer programs one slot; the first slot of a log page
// also programs the page's spare area.

#include <cstdint>
#include <deque>
#include <vector>

#include "flashdiff/driver.hpp"

namespace flashdiff {

struct IplLayout {
  std::uint32_t log_pages_per_block = 9;

  static IplLayout from_log_bytes(std::size_t log_region_bytes,
                                  const FlashGeometry& geometry);
};

inline constexpr std::size_t kIpl18LogBytes = 18 * 1024;
inline constexpr std::size_t kIpl64LogBytes = 64 * 1024;
inline constexpr std::uint32_t kIplSlotsPerPage = 16;

class IplDriver final : public Driver {
 public:
  IplDriver(const DriverConfig& config, IplLayout layout);
  IplDriver(const IplDriver&) = default;
  IplDriver& operator=(const IplDriver&) = delete;

  std::string name() const override;
  std::unique_ptr<Driver> clone() const override;
  void load(PageId id, std::span<const Byte> page) override;
  std::vector<Byte> read_logical(PageId id) override;
  // Appends every log, then writes the page's log buffer out. `page` is only
  // size-checked; the logs must describe it.
  void write_logical(PageId id, std::span<const Byte> page,
                     std::span<const UpdateLog> logs) override;
  void write_through() override;
  DriverStats stats() const override;

  // Adds one update log to the page's in-memory buffer. A full buffer is
  // written to the block's next log slot, merging the block first when no
  // slot is left.
  void append_log(PageId id, const UpdateLog& log);
  // Writes the page's buffer into a log slot if it holds anything.
  void flush_log_buffer(PageId id);
  void merge_unit(std::uint32_t unit);

  const IplLayout& layout() const { return layout_; }
  std::uint32_t originals_per_block() const { return originals_; }
  std::size_t log_buffer_bytes() const { return slot_bytes_; }
  std::uint32_t units() const { return static_cast<std::uint32_t>(unit_block_.size()); }
  std::uint32_t unit_of(PageId id) const { return id / originals_; }
  PhysPageAddr original_location(PageId id) const;
  std::uint32_t used_slots(std::uint32_t unit) const { return next_slot_.at(unit); }
  std::uint32_t written_log_pages(std::uint32_t unit) const;
  std::size_t buffered_bytes(PageId id) const { return pending_.at(id).size(); }
  std::uint32_t slots_per_unit() const {
    return layout_.log_pages_per_block * kIplSlotsPerPage;
  }

 private:
  void write_slot(std::uint32_t unit, std::span<const Byte> bytes);

  IplLayout layout_;
  std::uint32_t originals_;
  std::size_t slot_bytes_;
  std::vector<std::uint32_t> unit_block_;
  std::vector<std::uint32_t> next_slot_;
  std::deque<std::uint32_t> free_blocks_;
  std::vector<std::vector<Byte>> pending_;  // encoded records per page
  std::vector<bool> loaded_;
  std::uint64_t next_ts_ = 1;

  std::uint64_t merges_ = 0;
  OpCounts merge_ops_;
};

}  // namespace flashdiff
