#pragma once

// Synthetic update workload: each operation addresses one page; an update
// applies N in-memory changes to it before the page is written back.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "flashdiff/driver.hpp"

namespace flashdiff {

struct WorkloadParams {
  std::uint32_t n_updates_till_write = 1;
  double pct_changed_by_one_op = 2.0;  // of the page, per change
  double pct_update_ops = 100.0;
  std::uint32_t db_pages = 0;
  std::uint32_t page_bytes = 2048;
  std::uint64_t seed = 1;

  // Throws kInvalidArgument on out-of-range percentages or empty database.
  void validate() const;
};

// XOR masks at random disjoint offsets. Every mask byte is nonzero, so each
// covered byte really changes.
struct Change {
  std::vector<Run> masks;
};

struct Operation {
  PageId page = 0;
  bool update = false;
  std::vector<Change> changes;  // n_updates_till_write entries for updates
};

// round(pct/100 * page_bytes)
std::size_t changed_bytes_per_op(double pct, std::size_t page_bytes);

// Page choice and read/update decisions draw from one random stream and the
// change contents from another, so the page sequence does not depend on
// n_updates_till_write or pct_changed_by_one_op.
class WorkloadGenerator {
 public:
  explicit WorkloadGenerator(const WorkloadParams& params);

  Operation next();
  // `bytes` changed bytes split into 1..4 runs.
  Change make_change(std::size_t bytes);

  const WorkloadParams& params() const { return params_; }

 private:
  WorkloadParams params_;
  std::size_t change_bytes_;
  std::mt19937_64 op_rng_;
  std::mt19937_64 content_rng_;
};

// Applies `change` to `page` and returns the update log (new bytes).
UpdateLog apply_change(std::span<Byte> page, const Change& change);

// Deterministic initial content of a database page.
std::vector<Byte> initial_page(PageId id, std::uint64_t seed,
                               std::size_t page_bytes);

}  // namespace flashdiff
