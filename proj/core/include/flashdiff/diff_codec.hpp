#pragma once

// Page differentials: the byte ranges in which an up-to-date logical page
// differs from the base copy in flash, tagged with the owning page id and a
// creation timestamp.
//
// On-flash record (little endian):
//   u32 page_id | u64 timestamp | u16 run_count | run_count x run
//   run = u16 offset | u16 length | length bytes
// Records are packed back to back. The unused tail of a page stays erased
// (0xFF), so a run_count of 0xFFFF, or fewer than a header's worth of 0xFF
// bytes, marks the end of the records.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "flashdiff/flash_chip.hpp"

namespace flashdiff {

struct Run {
  std::uint16_t offset = 0;
  std::vector<Byte> data;  // length == data.size(), never 0

  std::size_t end() const { return offset + data.size(); }
  friend bool operator==(const Run&, const Run&) = default;
};

struct Differential {
  std::uint32_t page_id = 0;
  std::uint64_t timestamp = 0;
  std::vector<Run> runs;  // sorted, disjoint, gaps >= kRunHeaderBytes

  bool empty() const { return runs.empty(); }
  std::size_t changed_bytes() const;
  friend bool operator==(const Differential&, const Differential&) = default;
};

inline constexpr std::size_t kRecordHeaderBytes = 14;
inline constexpr std::size_t kRunHeaderBytes = 4;
inline constexpr std::uint16_t kPaddingRunCount = 0xFFFF;

// Max_Differential_Size: differentials whose encoding exceeds this are not
// stored; the whole page is written as a new base instead.
struct DiffBudget {
  std::size_t max_differential_size = 2048;

  void validate(std::size_t data_bytes) const;
};

// Byte-granular comparison. Differing bytes separated by fewer than
// kRunHeaderBytes equal bytes are folded into one run, which never makes the
// encoding larger.
Differential compute_differential(std::span<const Byte> base,
                                  std::span<const Byte> current,
                                  std::uint32_t page_id,
                                  std::uint64_t timestamp);

// Throws kCorruption if a run falls outside the page.
void apply_differential_in_place(std::span<Byte> page, const Differential& d);
std::vector<Byte> apply_differential(std::span<const Byte> base,
                                     const Differential& d);

std::size_t encoded_size(const Differential& d);

void encode_append(const Differential& d, std::vector<Byte>& out);
std::vector<Byte> encode(const Differential& d);

// Decodes every record in a differential page (or any byte span holding
// packed records followed by 0xFF padding). `page_bytes` bounds run extents.
std::vector<Differential> decode(std::span<const Byte> bytes,
                                 std::size_t page_bytes);

// Walks the records and materializes only the one for `page_id`.
std::optional<Differential> decode_find(std::span<const Byte> bytes,
                                        std::size_t page_bytes,
                                        std::uint32_t page_id);

// Appends every record for `page_id`, in on-flash order, to `out`.
void decode_matching(std::span<const Byte> bytes, std::size_t page_bytes,
                     std::uint32_t page_id, std::vector<Differential>& out);

}  // namespace flashdiff
