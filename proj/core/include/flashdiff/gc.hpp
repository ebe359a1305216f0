#pragma once

// Out-of-place allocation and garbage collection shared by the OPU and PDL
// drivers. One erased block is always held back as the GC destination.

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "flashdiff/flash_chip.hpp"

namespace flashdiff {

class PageAllocator {
 public:
  // Block n_blocks-1 starts as the reserved block; the others are handed out
  // in ascending order.
  explicit PageAllocator(const FlashGeometry& geometry);

  // Allocator for a chip that already holds data: the highest fully erased
  // block is reserved, the other erased blocks are queued, and partially
  // programmed blocks are left for GC. Throws kCapacity without an erased
  // block.
  static PageAllocator resume(const FlashChip& chip);

  // Next erased page, or nullopt when every non-reserved block is full.
  std::optional<PhysPageAddr> next();

  std::uint32_t reserved_block() const { return reserved_; }
  std::size_t free_pages() const;

  // True for blocks that may still receive programs (reserved, queued, or
  // the active block while it has room). GC never picks these.
  bool is_open(std::uint32_t block) const;

  // After GC: the erased victim becomes the reserved block and the old
  // reserved block, holding `used` relocated pages, becomes active.
  void rotate_after_gc(std::uint32_t victim, std::uint32_t used);

 private:
  PageAllocator() = default;

  std::uint32_t pages_per_block_ = 0;
  std::deque<std::uint32_t> free_blocks_;
  std::vector<bool> queued_;
  std::optional<std::uint32_t> active_;
  std::uint32_t next_page_ = 0;
  std::uint32_t reserved_ = 0;
};

// Hands out consecutive pages of the reserved block during one collection.
class RelocationTarget {
 public:
  RelocationTarget(std::uint32_t block, std::uint32_t pages_per_block)
      : block_(block), pages_per_block_(pages_per_block) {}

  PhysPageAddr take();
  std::uint32_t used() const { return used_; }

 private:
  std::uint32_t block_;
  std::uint32_t pages_per_block_;
  std::uint32_t used_ = 0;
};

// Driver side of a collection: moves whatever is still live in a valid page.
class GcClient {
 public:
  virtual ~GcClient() = default;
  virtual void relocate(PhysPageAddr from, std::span<const Byte> data,
                        const SpareArea& spare, RelocationTarget& to) = 0;
  virtual void finish_relocation(RelocationTarget& /*to*/) {}
};

struct GcStats {
  std::uint64_t invocations = 0;
  std::uint64_t pages_relocated = 0;
  OpCounts ops;
};

class GarbageCollector {
 public:
  // Greedy: most obsolete pages, lowest index on ties. nullopt if no closed
  // block holds an obsolete page.
  static std::optional<std::uint32_t> select_victim(const FlashChip& chip,
                                                    const PageAllocator& alloc);

  // Reclaims one victim. Throws kCapacity when there is none.
  void collect(FlashChip& chip, PageAllocator& alloc, GcClient& client);

  // alloc.next(), collecting as needed.
  PhysPageAddr allocate(FlashChip& chip, PageAllocator& alloc,
                        GcClient& client);

  const GcStats& stats() const { return stats_; }

 private:
  GcStats stats_;
};

}  // namespace flashdiff
