#include "flashdiff/ipu_driver.hpp"

#include <string>

#include "flashdiff/errors.hpp"

namespace flashdiff {

IpuDriver::IpuDriver(const DriverConfig& config)
    : Driver(config), loaded_(config.logical_pages, false) {
  if (config.logical_pages > config.geometry.total_pages()) {
    throw FlashError(ErrorCode::kCapacity, "database larger than the chip");
  }
}

std::unique_ptr<Driver> IpuDriver::clone() const {
  return std::make_unique<IpuDriver>(*this);
}

PhysPageAddr IpuDriver::location(PageId id) const {
  check_id(id);
  const auto ppb = chip_.geometry().pages_per_block;
  return {id / ppb, id % ppb};
}

void IpuDriver::load(PageId id, std::span<const Byte> page) {
  check_page(page);
  const PhysPageAddr addr = location(id);
  if (loaded_[id]) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "page " + std::to_string(id) + " already loaded");
  }
  SpareArea spare;
  spare.type = PageType::kData;
  spare.page_id = id;
  chip_.write_page(addr, page, spare);
  loaded_[id] = true;
}

std::vector<Byte> IpuDriver::read_logical(PageId id) {
  const PhysPageAddr addr = location(id);
  if (!loaded_[id]) {
    throw FlashError(ErrorCode::kNotFound, "page " + std::to_string(id));
  }
  ++logical_reads_;
  return chip_.read_page(addr);
}

void IpuDriver::write_logical(PageId id, std::span<const Byte> page,
                              std::span<const UpdateLog> /*logs*/) {
  check_page(page);
  const PhysPageAddr target = location(id);
  if (!loaded_[id]) {
    throw FlashError(ErrorCode::kNotFound, "page " + std::to_string(id));
  }
  ++logical_writes_;
  const auto ppb = chip_.geometry().pages_per_block;
  // (1) read every other page of the block
  std::vector<std::vector<Byte>> data(ppb);
  std::vector<SpareArea> spares(ppb);
  for (std::uint32_t p = 0; p < ppb; ++p) {
    if (p == target.page) continue;
    data[p] = chip_.read_page({target.block, p}, &spares[p]);
  }
  // (2) erase, (3) write the new page, (4) write back the rest
  chip_.erase_block(target.block);
  SpareArea spare;
  spare.type = PageType::kData;
  spare.page_id = id;
  chip_.write_page(target, page, spare);
  for (std::uint32_t p = 0; p < ppb; ++p) {
    if (p == target.page) continue;
    chip_.write_page({target.block, p}, data[p], spares[p]);
  }
}

DriverStats IpuDriver::stats() const { return base_stats(); }

}  // namespace flashdiff
