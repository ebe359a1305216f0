#pragma once

// TPC-C-lite: transactions touching pages with hot/cold skew through an LRU
// page buffer. A miss reads the page from the driver; evicting a dirty page
// writes it back with the update logs gathered while it was buffered.
//
// Pages hold fixed-size records. An update rewrites one to four columns of
// one record, and the updatable columns sit at the same offsets in every
// record, the way stock quantities or balances are updated in TPC-C.

#include <cstdint>
#include <list>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "flashdiff/experiment.hpp"

namespace flashdiff {

struct Column {
  std::uint16_t offset = 0;  // within a record
  std::uint16_t length = 0;
};

struct TpccLiteParams {
  std::vector<double> buffer_pcts = {0.1, 0.5, 1, 2, 5, 10};  // of db pages
  std::uint32_t touches_per_txn = 10;
  std::uint32_t updates_per_txn = 9;
  double hot_fraction = 0.2;  // share of pages that are hot
  double hot_access = 0.8;    // share of touches that go to hot pages
                              // (applied recursively within the hot set)
  std::uint32_t record_bytes = 128;
  std::vector<Column> columns = {{16, 8}, {40, 8}, {72, 4}, {96, 8}};
  std::uint32_t max_columns_per_update = 4;

  // The warm-up runs at warmup_buffer_pct until the BenchConfig GC goal is
  // met (capped); every buffer size then settles and measures on a copy.
  double warmup_buffer_pct = 1.0;
  std::uint64_t warmup_cap_txns = 100000;
  std::uint64_t settle_txns = 10000;
  std::uint64_t measure_txns = 10000;

  void validate(std::size_t page_bytes) const;
};

class LruBuffer {
 public:
  explicit LruBuffer(std::size_t frames) : frames_(frames) {}

  struct Frame {
    PageId id = 0;
    std::vector<Byte> page;
    std::vector<UpdateLog> logs;
    bool dirty = false;
  };

  // Buffered frame for `id`, moved to the front; nullptr on miss.
  Frame* find(PageId id);
  // Inserts a frame at the front; returns the evicted frame if the buffer
  // was full.
  std::optional<Frame> insert(Frame frame);

  std::size_t capacity() const { return frames_; }
  std::size_t size() const { return lru_.size(); }

 private:
  std::size_t frames_;
  std::list<Frame> lru_;
  std::unordered_map<PageId, std::list<Frame>::iterator> index_;
};

struct TpccTally {
  Tally io;
  std::uint64_t transactions = 0;
  std::uint64_t misses = 0;
  std::uint64_t dirty_evictions = 0;
};

class TpccLiteRunner {
 public:
  // `db_seed` fixes which pages are hot; `seed` drives the transactions.
  TpccLiteRunner(Workbench& bench, const TpccLiteParams& params,
                 std::size_t frames, std::uint64_t db_seed, std::uint64_t seed);

  TpccTally run(std::uint64_t transactions);

 private:
  PageId pick_page();
  Change make_update();
  void touch(PageId id, bool update, TpccTally& tally);

  Workbench& bench_;
  TpccLiteParams params_;
  LruBuffer buffer_;
  std::vector<PageId> order_;  // pages from hottest to coldest
  double skew_exponent_;
  std::mt19937_64 rng_;
  std::size_t records_per_page_;
};

std::size_t tpcc_frames(double buffer_pct, std::uint32_t db_pages);

std::vector<ResultRow> run_tpcc_lite(const std::vector<DriverKind>& kinds,
                                     const BenchConfig& config,
                                     const TpccLiteParams& params);

}  // namespace flashdiff
