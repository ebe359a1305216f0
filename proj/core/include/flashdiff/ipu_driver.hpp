#pragma once

// In-place update: logical page i always lives in physical page
// (i / pages_per_block, i % pages_per_block). Overwriting it means reading
// the rest of the block, erasing the block, and programming every page back.

#include <vector>

#include "flashdiff/driver.hpp"

namespace flashdiff {

class IpuDriver final : public Driver {
 public:
  explicit IpuDriver(const DriverConfig& config);
  IpuDriver(const IpuDriver&) = default;
  IpuDriver& operator=(const IpuDriver&) = delete;

  std::string name() const override { return "IPU"; }
  std::unique_ptr<Driver> clone() const override;
  void load(PageId id, std::span<const Byte> page) override;
  std::vector<Byte> read_logical(PageId id) override;
  void write_logical(PageId id, std::span<const Byte> page,
                     std::span<const UpdateLog> logs) override;
  void write_through() override {}
  DriverStats stats() const override;

  PhysPageAddr location(PageId id) const;

 private:
  std::vector<bool> loaded_;
};

}  // namespace flashdiff
