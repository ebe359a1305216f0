#include "flashdiff/opu_driver.hpp"

#include <string>

#include "flashdiff/errors.hpp"

namespace flashdiff {

OpuDriver::OpuDriver(const DriverConfig& config)
    : Driver(config), mapping_(config.logical_pages), allocator_(config.geometry) {}

std::unique_ptr<Driver> OpuDriver::clone() const {
  return std::make_unique<OpuDriver>(*this);
}

std::optional<PhysPageAddr> OpuDriver::location(PageId id) const {
  check_id(id);
  return mapping_[id];
}

void OpuDriver::load(PageId id, std::span<const Byte> page) {
  check_id(id);
  check_page(page);
  if (mapping_[id]) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "page " + std::to_string(id) + " already loaded");
  }
  write_page(id, page);
}

std::vector<Byte> OpuDriver::read_logical(PageId id) {
  check_id(id);
  if (!mapping_[id]) {
    throw FlashError(ErrorCode::kNotFound, "page " + std::to_string(id));
  }
  ++logical_reads_;
  return chip_.read_page(*mapping_[id]);
}

void OpuDriver::write_logical(PageId id, std::span<const Byte> page,
                              std::span<const UpdateLog> /*logs*/) {
  check_id(id);
  check_page(page);
  ++logical_writes_;
  write_page(id, page);
}

void OpuDriver::write_page(PageId id, std::span<const Byte> page) {
  const PhysPageAddr q = gc_.allocate(chip_, allocator_, *this);
  SpareArea spare;
  spare.type = PageType::kData;
  spare.page_id = id;
  spare.timestamp = next_ts_++;
  chip_.write_page(q, page, spare);
  if (mapping_[id]) chip_.set_obsolete(*mapping_[id]);
  mapping_[id] = q;
}

void OpuDriver::relocate(PhysPageAddr from, std::span<const Byte> data,
                         const SpareArea& spare, RelocationTarget& to) {
  auto& slot = mapping_.at(*spare.page_id);
  if (slot != from) return;
  const PhysPageAddr dest = to.take();
  chip_.write_page(dest, data, spare);
  slot = dest;
}

DriverStats OpuDriver::stats() const {
  DriverStats s = base_stats();
  s.maintenance = gc_.stats().ops;
  s.gc_invocations = gc_.stats().invocations;
  return s;
}

}  // namespace flashdiff
