#include "flashdiff/pdl_driver.hpp"

#include <string>

#include "flashdiff/errors.hpp"

namespace flashdiff {

PdlDriver::PdlDriver(const DriverConfig& config, DiffBudget budget)
    : Driver(config),
      budget_(budget),
      mapping_(config.logical_pages),
      valid_counts_(config.geometry.total_pages(), 0),
      buffer_slot_(config.logical_pages, -1),
      allocator_(config.geometry) {
  budget_.validate(config.geometry.data_bytes);
}

PdlDriver::PdlDriver(const DriverConfig& config, DiffBudget budget,
                     FlashChip chip, const PageMappingTable& mapping,
                     std::uint64_t max_timestamp)
    : Driver(config),
      budget_(budget),
      mapping_(config.logical_pages),
      valid_counts_(config.geometry.total_pages(), 0),
      buffer_slot_(config.logical_pages, -1),
      next_ts_(max_timestamp + 1),
      allocator_(PageAllocator::resume(chip)) {
  budget_.validate(config.geometry.data_bytes);
  if (!(chip.geometry() == config.geometry)) {
    throw FlashError(ErrorCode::kInvalidArgument, "chip geometry mismatch");
  }
  chip_ = std::move(chip);
  for (const auto& [id, entry] : mapping) {
    check_id(id);
    mapping_[id] = entry;
    if (entry.differential) ++valid_counts_[page_index(*entry.differential)];
  }
}

PdlDriver::PdlDriver(const PdlDriver& other) = default;

std::string PdlDriver::name() const {
  if (budget_.max_differential_size == kPdl256MaxDifferential) return "PDL(256B)";
  if (budget_.max_differential_size == kPdl2kMaxDifferential) return "PDL(2KB)";
  return "PDL(" + std::to_string(budget_.max_differential_size) + "B)";
}

std::unique_ptr<Driver> PdlDriver::clone() const {
  return std::make_unique<PdlDriver>(*this);
}

std::size_t PdlDriver::page_index(PhysPageAddr addr) const {
  return std::size_t{addr.block} * chip_.geometry().pages_per_block + addr.page;
}

PhysPageAddr PdlDriver::allocate() {
  return gc_.allocate(chip_, allocator_, *this);
}

const std::optional<MappingEntry>& PdlDriver::mapping(PageId id) const {
  check_id(id);
  return mapping_[id];
}

const Differential* PdlDriver::buffered(PageId id) const {
  check_id(id);
  const auto slot = buffer_slot_[id];
  return slot < 0 ? nullptr : &buffer_[static_cast<std::size_t>(slot)];
}

void PdlDriver::load(PageId id, std::span<const Byte> page) {
  check_id(id);
  check_page(page);
  if (mapping_[id]) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "page " + std::to_string(id) + " already loaded");
  }
  write_new_base(id, page);
}

std::vector<Byte> PdlDriver::read_logical(PageId id) {
  ++logical_reads_;
  return pdl_read(id);
}

void PdlDriver::write_logical(PageId id, std::span<const Byte> page,
                              std::span<const UpdateLog> /*logs*/) {
  ++logical_writes_;
  pdl_write(id, page);
}

void PdlDriver::write_through() {
  if (!buffer_.empty()) flush_buffer();
}

void PdlDriver::remove_buffered(PageId id) {
  const auto slot = buffer_slot_[id];
  if (slot < 0) return;
  const auto index = static_cast<std::size_t>(slot);
  buffer_bytes_ -= encoded_size(buffer_[index]);
  if (index + 1 != buffer_.size()) {
    buffer_[index] = std::move(buffer_.back());
    buffer_slot_[buffer_[index].page_id] = slot;
  }
  buffer_.pop_back();
  buffer_slot_[id] = -1;
}

void PdlDriver::append_buffered(Differential d) {
  buffer_bytes_ += encoded_size(d);
  buffer_slot_[d.page_id] = static_cast<std::int32_t>(buffer_.size());
  buffer_.push_back(std::move(d));
}

void PdlDriver::pdl_write(PageId id, std::span<const Byte> page) {
  check_id(id);
  check_page(page);
  if (!mapping_[id]) {
    write_new_base(id, page);
    return;
  }
  // Step 1: the base page always comes from the chip.
  const auto base = chip_.read_page(mapping_[id]->base);
  // Step 2. The timestamp is assigned when the buffer is flushed.
  Differential d = compute_differential(base, page, id, 0);
  // Step 3: an older buffered differential of this page is replaced.
  remove_buffered(id);
  const std::size_t size = encoded_size(d);
  const std::size_t capacity = chip_.geometry().data_bytes;
  // The size bound is tested first so that no stored differential ever
  // exceeds it, even one that would fit the buffer's free space.
  if (size > budget_.max_differential_size) {
    ++case3_;
    write_new_base(id, page);
  } else if (size <= capacity - buffer_bytes_) {
    ++case1_;
    append_buffered(std::move(d));
  } else {
    ++case2_;
    flush_buffer();
    append_buffered(std::move(d));
  }
}

void PdlDriver::flush_buffer() {
  if (buffer_.empty()) return;
  const PhysPageAddr q = allocate();
  const std::uint64_t ts = next_ts_++;
  std::vector<Byte> data;
  data.reserve(chip_.geometry().data_bytes);
  for (auto& d : buffer_) {
    d.timestamp = ts;
    encode_append(d, data);
  }
  data.resize(chip_.geometry().data_bytes, kErasedByte);
  SpareArea spare;
  spare.type = PageType::kDifferential;
  spare.timestamp = ts;
  chip_.write_page(q, data, spare);

  for (const auto& d : buffer_) {
    auto& entry = *mapping_[d.page_id];
    decrease_valid_count(entry.differential);
    entry.differential = q;
    entry.differential_ts = ts;
    ++valid_counts_[page_index(q)];
    buffer_slot_[d.page_id] = -1;
  }
  buffer_.clear();
  buffer_bytes_ = 0;
  ++flushes_;
}

void PdlDriver::write_new_base(PageId id, std::span<const Byte> page) {
  check_id(id);
  check_page(page);
  remove_buffered(id);
  // Allocate first: a collection may move this page's current base.
  const PhysPageAddr q = allocate();
  const std::uint64_t ts = next_ts_++;
  SpareArea spare;
  spare.type = PageType::kBase;
  spare.page_id = id;
  spare.timestamp = ts;
  chip_.write_page(q, page, spare);

  auto& entry = mapping_[id];
  if (entry) {
    chip_.set_obsolete(entry->base);
    decrease_valid_count(entry->differential);
  }
  entry = MappingEntry{q, ts, std::nullopt, 0};
}

void PdlDriver::decrease_valid_count(std::optional<PhysPageAddr> page) {
  if (!page) return;
  auto& count = valid_counts_[page_index(*page)];
  if (count == 0) {
    throw FlashError(ErrorCode::kCorruption,
                     "valid differential count underflow at " + to_string(*page));
  }
  if (--count == 0) chip_.set_obsolete(*page);
}

std::vector<Byte> PdlDriver::pdl_read(PageId id) {
  check_id(id);
  const auto& entry = mapping_[id];
  if (!entry) {
    throw FlashError(ErrorCode::kNotFound, "page " + std::to_string(id));
  }
  auto page = chip_.read_page(entry->base);
  if (const Differential* d = buffered(id)) {
    apply_differential_in_place(page, *d);
  } else if (entry->differential) {
    const auto diff_page = chip_.read_page(*entry->differential);
    auto d = decode_find(diff_page, page.size(), id);
    if (!d) {
      throw FlashError(ErrorCode::kCorruption,
                       "differential of page " + std::to_string(id) +
                           " missing from " + to_string(*entry->differential));
    }
    apply_differential_in_place(page, *d);
  }
  return page;
}

PageMappingTable PdlDriver::mapping_table() const {
  PageMappingTable table;
  for (PageId id = 0; id < mapping_.size(); ++id) {
    if (mapping_[id]) table.emplace(id, *mapping_[id]);
  }
  return table;
}

ValidDifferentialCountTable PdlDriver::valid_counts() const {
  ValidDifferentialCountTable table;
  const auto ppb = chip_.geometry().pages_per_block;
  for (std::size_t i = 0; i < valid_counts_.size(); ++i) {
    if (valid_counts_[i] != 0) {
      table.emplace(PhysPageAddr{static_cast<std::uint32_t>(i / ppb),
                                 static_cast<std::uint32_t>(i % ppb)},
                    valid_counts_[i]);
    }
  }
  return table;
}

std::uint32_t PdlDriver::valid_count(PhysPageAddr page) const {
  return valid_counts_.at(page_index(page));
}

void PdlDriver::check_invariants() const {
  std::vector<std::uint32_t> expected(valid_counts_.size(), 0);
  for (const auto& entry : mapping_) {
    if (entry && entry->differential) ++expected[page_index(*entry->differential)];
  }
  if (expected != valid_counts_) {
    throw FlashError(ErrorCode::kCorruption,
                     "valid differential counts disagree with the mapping table");
  }
  std::size_t bytes = 0;
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    const auto id = buffer_[i].page_id;
    if (buffer_slot_[id] != static_cast<std::int32_t>(i) || !mapping_[id]) {
      throw FlashError(ErrorCode::kCorruption, "write buffer index is stale");
    }
    bytes += encoded_size(buffer_[i]);
  }
  if (bytes != buffer_bytes_ || bytes > chip_.geometry().data_bytes) {
    throw FlashError(ErrorCode::kCorruption, "write buffer size accounting");
  }
}

DriverStats PdlDriver::stats() const {
  DriverStats s = base_stats();
  s.name = name();
  s.maintenance = gc_.stats().ops;
  s.gc_invocations = gc_.stats().invocations;
  s.diff_case1 = case1_;
  s.diff_case2 = case2_;
  s.diff_case3 = case3_;
  s.buffer_flushes = flushes_;
  return s;
}

// --- garbage collection -----------------------------------------------------

void PdlDriver::relocate(PhysPageAddr from, std::span<const Byte> data,
                         const SpareArea& spare, RelocationTarget& to) {
  if (spare.type == PageType::kBase) {
    auto& entry = mapping_.at(*spare.page_id);
    if (!entry || entry->base != from) return;  // stale copy, dropped
    const PhysPageAddr dest = to.take();
    chip_.write_page(dest, data, spare);
    entry->base = dest;
    return;
  }
  if (spare.type != PageType::kDifferential) {
    throw FlashError(ErrorCode::kCorruption,
                     std::string("unexpected ") + to_string(spare.type) +
                         " page at " + to_string(from));
  }
  // Keep only differentials the mapping table still points at.
  std::vector<Differential> live;
  std::size_t live_bytes = 0;
  for (auto& d : decode(data, data.size())) {
    const auto& entry = mapping_.at(d.page_id);
    if (entry && entry->differential == from) {
      live_bytes += encoded_size(d);
      live.push_back(std::move(d));
    }
  }
  if (compaction_bytes_ + live_bytes > data.size()) write_compaction_page(to);
  for (auto& d : live) compaction_.emplace_back(std::move(d), from);
  compaction_bytes_ += live_bytes;
  valid_counts_[page_index(from)] = 0;
}

void PdlDriver::finish_relocation(RelocationTarget& to) {
  if (!compaction_.empty()) write_compaction_page(to);
}

void PdlDriver::write_compaction_page(RelocationTarget& to) {
  if (compaction_.empty()) return;
  const PhysPageAddr dest = to.take();
  std::vector<Byte> data;
  for (const auto& [d, from] : compaction_) encode_append(d, data);
  data.resize(chip_.geometry().data_bytes, kErasedByte);
  SpareArea spare;
  spare.type = PageType::kDifferential;
  chip_.write_page(dest, data, spare);
  for (const auto& [d, from] : compaction_) {
    mapping_[d.page_id]->differential = dest;
    ++valid_counts_[page_index(dest)];
  }
  compaction_.clear();
  compaction_bytes_ = 0;
}

}  // namespace flashdiff
