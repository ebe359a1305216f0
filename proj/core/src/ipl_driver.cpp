#include "flashdiff/ipl_driver.hpp"

#include <algorithm>
#include <string>

#include "flashdiff/errors.hpp"

namespace flashdiff {

namespace {

// Smallest record that still carries a byte of payload.
constexpr std::size_t kMinRecordBytes = kRecordHeaderBytes + kRunHeaderBytes + 1;

}  // namespace

IplLayout IplLayout::from_log_bytes(std::size_t log_region_bytes,
                                    const FlashGeometry& geometry) {
  if (log_region_bytes == 0 || log_region_bytes % geometry.data_bytes != 0) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "log region must be a whole number of pages");
  }
  IplLayout layout;
  layout.log_pages_per_block =
      static_cast<std::uint32_t>(log_region_bytes / geometry.data_bytes);
  return layout;
}

IplDriver::IplDriver(const DriverConfig& config, IplLayout layout)
    : Driver(config),
      layout_(layout),
      originals_(config.geometry.pages_per_block - layout.log_pages_per_block),
      slot_bytes_(config.geometry.data_bytes / kIplSlotsPerPage),
      pending_(config.logical_pages),
      loaded_(config.logical_pages, false) {
  const auto& g = config.geometry;
  if (layout.log_pages_per_block == 0 ||
      layout.log_pages_per_block >= g.pages_per_block) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "log pages must leave room for originals");
  }
  if (slot_bytes_ < kMinRecordBytes) {
    throw FlashError(ErrorCode::kInvalidArgument, "log buffer too small");
  }
  const std::uint32_t units =
      (config.logical_pages + originals_ - 1) / originals_;
  // One extra block is needed as the merge destination.
  if (std::uint64_t{units} + 1 > g.n_blocks) {
    throw FlashError(ErrorCode::kCapacity,
                     std::to_string(config.logical_pages) + " pages need " +
                         std::to_string(units + 1) + " blocks under " + name());
  }
  unit_block_.resize(units);
  next_slot_.assign(units, 0);
  for (std::uint32_t u = 0; u < units; ++u) unit_block_[u] = u;
  for (std::uint32_t b = units; b < g.n_blocks; ++b) free_blocks_.push_back(b);
}

std::string IplDriver::name() const {
  const std::size_t kib =
      std::size_t{layout_.log_pages_per_block} * chip_.geometry().data_bytes / 1024;
  return "IPL(" + std::to_string(kib) + "KB)";
}

std::unique_ptr<Driver> IplDriver::clone() const {
  return std::make_unique<IplDriver>(*this);
}

PhysPageAddr IplDriver::original_location(PageId id) const {
  check_id(id);
  return {unit_block_[unit_of(id)], id % originals_};
}

std::uint32_t IplDriver::written_log_pages(std::uint32_t unit) const {
  return (next_slot_.at(unit) + kIplSlotsPerPage - 1) / kIplSlotsPerPage;
}

void IplDriver::load(PageId id, std::span<const Byte> page) {
  check_page(page);
  const PhysPageAddr addr = original_location(id);
  if (loaded_[id]) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "page " + std::to_string(id) + " already loaded");
  }
  SpareArea spare;
  spare.type = PageType::kOriginal;
  spare.page_id = id;
  spare.timestamp = next_ts_++;
  chip_.write_page(addr, page, spare);
  loaded_[id] = true;
}

std::vector<Byte> IplDriver::read_logical(PageId id) {
  const PhysPageAddr addr = original_location(id);
  if (!loaded_[id]) {
    throw FlashError(ErrorCode::kNotFound, "page " + std::to_string(id));
  }
  ++logical_reads_;
  auto page = chip_.read_page(addr);
  const std::uint32_t unit = unit_of(id);
  const std::uint32_t block = unit_block_[unit];
  std::vector<Differential> logs;
  for (std::uint32_t k = 0; k < written_log_pages(unit); ++k) {
    const auto data = chip_.read_page({block, originals_ + k});
    for (std::uint32_t s = 0; s < kIplSlotsPerPage; ++s) {
      const std::span<const Byte> slot(data.data() + s * slot_bytes_, slot_bytes_);
      decode_matching(slot, page.size(), id, logs);
    }
  }
  decode_matching(pending_[id], page.size(), id, logs);
  std::stable_sort(logs.begin(), logs.end(),
                   [](const Differential& a, const Differential& b) {
                     return a.timestamp < b.timestamp;
                   });
  for (const auto& d : logs) apply_differential_in_place(page, d);
  return page;
}

void IplDriver::write_logical(PageId id, std::span<const Byte> page,
                              std::span<const UpdateLog> logs) {
  check_page(page);
  check_id(id);
  if (!loaded_[id]) {
    throw FlashError(ErrorCode::kNotFound, "page " + std::to_string(id));
  }
  ++logical_writes_;
  for (const auto& log : logs) append_log(id, log);
  flush_log_buffer(id);
}

void IplDriver::write_through() {
  for (PageId id = 0; id < pending_.size(); ++id) flush_log_buffer(id);
}

void IplDriver::append_log(PageId id, const UpdateLog& log) {
  check_id(id);
  const std::uint64_t ts = next_ts_++;
  const std::size_t page_bytes = chip_.geometry().data_bytes;
  std::size_t run = 0;
  std::size_t consumed = 0;  // bytes of log[run] already emitted
  while (run < log.size()) {
    auto& buffer = pending_[id];
    if (slot_bytes_ - buffer.size() < kMinRecordBytes) {
      flush_log_buffer(id);
      continue;
    }
    std::size_t room = slot_bytes_ - buffer.size() - kRecordHeaderBytes;
    Differential d{id, ts, {}};
    while (run < log.size() && room >= kRunHeaderBytes + 1) {
      const Run& r = log[run];
      if (r.data.empty() || r.end() > page_bytes) {
        throw FlashError(ErrorCode::kInvalidArgument, "update log outside the page");
      }
      const std::size_t left = r.data.size() - consumed;
      const std::size_t take = std::min(left, room - kRunHeaderBytes);
      Run piece;
      piece.offset = static_cast<std::uint16_t>(r.offset + consumed);
      piece.data.assign(r.data.begin() + static_cast<std::ptrdiff_t>(consumed),
                        r.data.begin() + static_cast<std::ptrdiff_t>(consumed + take));
      d.runs.push_back(std::move(piece));
      room -= kRunHeaderBytes + take;
      consumed += take;
      if (consumed == r.data.size()) {
        ++run;
        consumed = 0;
      }
    }
    encode_append(d, buffer);
  }
  if (slot_bytes_ - pending_[id].size() < kMinRecordBytes) flush_log_buffer(id);
}

void IplDriver::flush_log_buffer(PageId id) {
  check_id(id);
  auto& buffer = pending_[id];
  if (buffer.empty()) return;
  const std::uint32_t unit = unit_of(id);
  if (next_slot_[unit] == slots_per_unit()) merge_unit(unit);
  write_slot(unit, buffer);
  buffer.clear();
}

void IplDriver::write_slot(std::uint32_t unit, std::span<const Byte> bytes) {
  const std::uint32_t slot = next_slot_[unit]++;
  const PhysPageAddr addr{unit_block_[unit], originals_ + slot / kIplSlotsPerPage};
  const std::size_t offset = std::size_t{slot % kIplSlotsPerPage} * slot_bytes_;
  if (offset == 0) {
    // First slot of the page: program the page header along with it.
    std::vector<Byte> data(chip_.geometry().data_bytes, kErasedByte);
    std::copy(bytes.begin(), bytes.end(), data.begin());
    SpareArea spare;
    spare.type = PageType::kLog;
    spare.page_id = unit;
    spare.timestamp = next_ts_++;
    chip_.write_page(addr, data, spare);
  } else {
    chip_.program_partial(addr, offset, bytes);
  }
}

void IplDriver::merge_unit(std::uint32_t unit) {
  if (free_blocks_.empty()) {
    throw FlashError(ErrorCode::kCapacity, "no free block to merge into");
  }
  const OpCounts before = chip_.counts();
  const std::uint32_t old_block = unit_block_.at(unit);
  const std::size_t page_bytes = chip_.geometry().data_bytes;

  std::vector<std::vector<Byte>> log_pages;
  for (std::uint32_t k = 0; k < written_log_pages(unit); ++k) {
    log_pages.push_back(chip_.read_page({old_block, originals_ + k}));
  }
  const std::uint32_t new_block = free_blocks_.front();
  free_blocks_.pop_front();

  const PageId first = unit * originals_;
  for (std::uint32_t p = 0; p < originals_; ++p) {
    const PageId id = first + p;
    if (id >= logical_pages_ || !loaded_[id]) continue;
    SpareArea spare;
    auto page = chip_.read_page({old_block, p}, &spare);
    std::vector<Differential> logs;
    for (const auto& data : log_pages) {
      for (std::uint32_t s = 0; s < kIplSlotsPerPage; ++s) {
        const std::span<const Byte> slot(data.data() + s * slot_bytes_, slot_bytes_);
        decode_matching(slot, page_bytes, id, logs);
      }
    }
    std::stable_sort(logs.begin(), logs.end(),
                     [](const Differential& a, const Differential& b) {
                       return a.timestamp < b.timestamp;
                     });
    for (const auto& d : logs) apply_differential_in_place(page, d);
    spare.timestamp = next_ts_++;
    spare.obsolete = false;
    chip_.write_page({new_block, p}, page, spare);
  }
  chip_.erase_block(old_block);
  free_blocks_.push_back(old_block);
  unit_block_[unit] = new_block;
  next_slot_[unit] = 0;
  ++merges_;
  merge_ops_ += chip_.counts() - before;
}

DriverStats IplDriver::stats() const {
  DriverStats s = base_stats();
  s.maintenance = merge_ops_;
  s.merges = merges_;
  return s;
}

}  // namespace flashdiff
