#include "flashdiff/gc.hpp"

#include <vector>

#include "flashdiff/errors.hpp"

namespace flashdiff {

PageAllocator::PageAllocator(const FlashGeometry& geometry)
    : pages_per_block_(geometry.pages_per_block),
      reserved_(geometry.n_blocks - 1) {
  if (geometry.n_blocks < 2) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "out-of-place allocation needs at least two blocks");
  }
  queued_.assign(geometry.n_blocks, false);
  for (std::uint32_t b = 0; b + 1 < geometry.n_blocks; ++b) {
    free_blocks_.push_back(b);
    queued_[b] = true;
  }
}

PageAllocator PageAllocator::resume(const FlashChip& chip) {
  const auto& g = chip.geometry();
  PageAllocator alloc;
  alloc.pages_per_block_ = g.pages_per_block;
  alloc.queued_.assign(g.n_blocks, false);
  std::optional<std::uint32_t> reserved;
  for (std::uint32_t b = g.n_blocks; b-- > 0;) {
    if (chip.programmed_pages(b) != 0) continue;
    if (!reserved) {
      reserved = b;
    } else {
      alloc.free_blocks_.push_front(b);
      alloc.queued_[b] = true;
    }
  }
  if (!reserved) {
    throw FlashError(ErrorCode::kCapacity, "no erased block to reserve for GC");
  }
  alloc.reserved_ = *reserved;
  return alloc;
}

std::optional<PhysPageAddr> PageAllocator::next() {
  if (!active_ || next_page_ == pages_per_block_) {
    if (free_blocks_.empty()) return std::nullopt;
    active_ = free_blocks_.front();
    free_blocks_.pop_front();
    queued_[*active_] = false;
    next_page_ = 0;
  }
  return PhysPageAddr{*active_, next_page_++};
}

std::size_t PageAllocator::free_pages() const {
  std::size_t n = free_blocks_.size() * pages_per_block_;
  if (active_) n += pages_per_block_ - next_page_;
  return n;
}

bool PageAllocator::is_open(std::uint32_t block) const {
  if (block == reserved_) return true;
  if (active_ && block == *active_ && next_page_ < pages_per_block_) return true;
  return queued_.at(block);
}

void PageAllocator::rotate_after_gc(std::uint32_t victim, std::uint32_t used) {
  active_ = reserved_;
  next_page_ = used;
  reserved_ = victim;
}

PhysPageAddr RelocationTarget::take() {
  if (used_ == pages_per_block_) {
    throw FlashError(ErrorCode::kCapacity, "relocation overflowed the reserved block");
  }
  return {block_, used_++};
}

std::optional<std::uint32_t> GarbageCollector::select_victim(
    const FlashChip& chip, const PageAllocator& alloc) {
  std::optional<std::uint32_t> best;
  std::uint32_t best_obsolete = 0;
  for (std::uint32_t b = 0; b < chip.geometry().n_blocks; ++b) {
    const auto obsolete = chip.obsolete_pages(b);
    if (obsolete > best_obsolete && !alloc.is_open(b)) {
      best = b;
      best_obsolete = obsolete;
    }
  }
  return best;
}

void GarbageCollector::collect(FlashChip& chip, PageAllocator& alloc,
                               GcClient& client) {
  const auto victim = select_victim(chip, alloc);
  if (!victim) {
    throw FlashError(ErrorCode::kCapacity, "no block with obsolete pages");
  }
  const OpCounts before = chip.counts();
  const auto& g = chip.geometry();
  RelocationTarget target(alloc.reserved_block(), g.pages_per_block);
  std::vector<Byte> data(g.data_bytes);
  for (std::uint32_t p = 0; p < g.pages_per_block; ++p) {
    const PhysPageAddr addr{*victim, p};
    if (!chip.is_programmed(addr) || chip.peek_spare(addr).obsolete) continue;
    const SpareArea spare = chip.read_page(addr, std::span<Byte>(data));
    client.relocate(addr, data, spare, target);
    ++stats_.pages_relocated;
  }
  client.finish_relocation(target);
  chip.erase_block(*victim);
  alloc.rotate_after_gc(*victim, target.used());
  ++stats_.invocations;
  stats_.ops += chip.counts() - before;
}

PhysPageAddr GarbageCollector::allocate(FlashChip& chip, PageAllocator& alloc,
                                        GcClient& client) {
  for (;;) {
    if (auto addr = alloc.next()) return *addr;
    collect(chip, alloc, client);
  }
}

}  // namespace flashdiff
