#pragma once

// Out-place update with page-level mapping: every reflection programs the
// whole page into a fresh physical page and marks the previous copy obsolete.

#include <optional>
#include <vector>

#include "flashdiff/driver.hpp"
#include "flashdiff/gc.hpp"

namespace flashdiff {

class OpuDriver final : public Driver, private GcClient {
 public:
  explicit OpuDriver(const DriverConfig& config);
  OpuDriver(const OpuDriver&) = default;
  OpuDriver& operator=(const OpuDriver&) = delete;

  std::string name() const override { return "OPU"; }
  std::unique_ptr<Driver> clone() const override;
  void load(PageId id, std::span<const Byte> page) override;
  std::vector<Byte> read_logical(PageId id) override;
  void write_logical(PageId id, std::span<const Byte> page,
                     std::span<const UpdateLog> logs) override;
  void write_through() override {}
  DriverStats stats() const override;

  std::optional<PhysPageAddr> location(PageId id) const;

 private:
  void relocate(PhysPageAddr from, std::span<const Byte> data,
                const SpareArea& spare, RelocationTarget& to) override;
  void write_page(PageId id, std::span<const Byte> page);

  std::vector<std::optional<PhysPageAddr>> mapping_;
  std::uint64_t next_ts_ = 1;
  PageAllocator allocator_;
  GarbageCollector gc_;
};

}  // namespace flashdiff
