#include "flashdiff/tpcc_lite.hpp"

#include <algorithm>
#include <cmath>

#include "flashdiff/errors.hpp"

namespace flashdiff {

namespace {

constexpr std::uint64_t kTpccDbSeed = 404;
constexpr std::uint64_t kTpccWarmSeed = 505;
constexpr std::uint64_t kTpccSeed = 606;
constexpr std::uint64_t kWarmChunk = 1000;

}  // namespace

void TpccLiteParams::validate(std::size_t page_bytes) const {
  if (touches_per_txn == 0 || updates_per_txn > touches_per_txn) {
    throw FlashError(ErrorCode::kInvalidArgument, "bad transaction shape");
  }
  if (!(hot_fraction > 0.0 && hot_fraction < 1.0) ||
      !(hot_access > 0.0 && hot_access <= 1.0) || hot_access < hot_fraction) {
    throw FlashError(ErrorCode::kInvalidArgument, "bad skew parameters");
  }
  if (record_bytes == 0 || record_bytes > page_bytes || columns.empty() ||
      max_columns_per_update == 0) {
    throw FlashError(ErrorCode::kInvalidArgument, "bad record layout");
  }
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const auto& c = columns[i];
    if (c.length == 0 || c.offset + c.length > record_bytes ||
        (i > 0 && columns[i - 1].offset + columns[i - 1].length > c.offset)) {
      throw FlashError(ErrorCode::kInvalidArgument,
                       "columns must be sorted, disjoint and inside a record");
    }
  }
}

LruBuffer::Frame* LruBuffer::find(PageId id) {
  auto it = index_.find(id);
  if (it == index_.end()) return nullptr;
  lru_.splice(lru_.begin(), lru_, it->second);
  return &lru_.front();
}

std::optional<LruBuffer::Frame> LruBuffer::insert(Frame frame) {
  std::optional<Frame> evicted;
  if (lru_.size() == frames_) {
    evicted = std::move(lru_.back());
    index_.erase(evicted->id);
    lru_.pop_back();
  }
  const PageId id = frame.id;
  lru_.push_front(std::move(frame));
  index_[id] = lru_.begin();
  return evicted;
}

std::size_t tpcc_frames(double buffer_pct, std::uint32_t db_pages) {
  const auto n = static_cast<std::size_t>(std::llround(buffer_pct / 100.0 * db_pages));
  return std::max<std::size_t>(1, n);
}

TpccLiteRunner::TpccLiteRunner(Workbench& bench, const TpccLiteParams& params,
                               std::size_t frames, std::uint64_t db_seed,
                               std::uint64_t seed)
    : bench_(bench),
      params_(params),
      buffer_(frames),
      rng_(seed),
      records_per_page_(bench.shadow(0).size() / params.record_bytes) {
  params_.validate(bench.shadow(0).size());
  order_.resize(bench.db_pages());
  for (PageId i = 0; i < order_.size(); ++i) order_[i] = i;
  std::mt19937_64 db_rng(db_seed);
  std::shuffle(order_.begin(), order_.end(), db_rng);
  skew_exponent_ = params.hot_access == 1.0
                       ? 0.0
                       : std::log(params.hot_fraction) / std::log(params.hot_access);
}

// Self-similar skew: hot_access of the touches go to the first hot_fraction
// of the pages, and the same split repeats inside every prefix.
PageId TpccLiteRunner::pick_page() {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  const double x = std::pow(u, skew_exponent_);
  const auto i = std::min(order_.size() - 1,
                          static_cast<std::size_t>(x * static_cast<double>(order_.size())));
  return order_[i];
}

Change TpccLiteRunner::make_update() {
  const auto record = std::uniform_int_distribution<std::size_t>(
      0, records_per_page_ - 1)(rng_);
  const auto n = std::uniform_int_distribution<std::size_t>(
      1, std::min<std::size_t>(params_.max_columns_per_update,
                               params_.columns.size()))(rng_);
  std::vector<std::size_t> picked(params_.columns.size());
  for (std::size_t i = 0; i < picked.size(); ++i) picked[i] = i;
  std::shuffle(picked.begin(), picked.end(), rng_);
  picked.resize(n);
  std::sort(picked.begin(), picked.end());

  std::uniform_int_distribution<int> nonzero(1, 255);
  Change change;
  for (std::size_t i : picked) {
    const Column& column = params_.columns[i];
    Run mask;
    mask.offset = static_cast<std::uint16_t>(record * params_.record_bytes + column.offset);
    mask.data.resize(column.length);
    for (auto& b : mask.data) b = static_cast<Byte>(nonzero(rng_));
    change.masks.push_back(std::move(mask));
  }
  return change;
}

void TpccLiteRunner::touch(PageId id, bool update, TpccTally& tally) {
  LruBuffer::Frame* frame = buffer_.find(id);
  if (frame == nullptr) {
    ++tally.misses;
    LruBuffer::Frame fresh;
    fresh.id = id;
    fresh.page = bench_.read_page(id, tally.io);
    if (auto evicted = buffer_.insert(std::move(fresh)); evicted && evicted->dirty) {
      ++tally.dirty_evictions;
      bench_.write_page(evicted->id, evicted->page, evicted->logs, tally.io);
    }
    frame = buffer_.find(id);
  }
  if (!update) return;
  ++tally.io.updates;
  frame->logs.push_back(apply_change(frame->page, make_update()));
  frame->dirty = true;
}

TpccTally TpccLiteRunner::run(std::uint64_t transactions) {
  TpccTally tally;
  std::vector<bool> kinds(params_.touches_per_txn, false);
  for (std::uint64_t t = 0; t < transactions; ++t) {
    std::fill(kinds.begin(), kinds.end(), false);
    std::fill(kinds.begin(), kinds.begin() + params_.updates_per_txn, true);
    std::shuffle(kinds.begin(), kinds.end(), rng_);
    for (bool update : kinds) touch(pick_page(), update, tally);
    ++tally.transactions;
  }
  tally.io.ops = tally.transactions;
  return tally;
}

Workbench tpcc_warm_up(DriverKind kind, const BenchConfig& config,
                       const TpccLiteParams& params) {
  config.validate();
  Workbench bench(kind, config.driver_config(), config.seed);
  if (kind == DriverKind::kIpu) return bench;
  TpccLiteRunner runner(bench, params, tpcc_frames(params.warmup_buffer_pct, config.db_pages),
                        config.seed + kTpccDbSeed, config.seed + kTpccWarmSeed);
  const std::uint64_t goal = warm_up_goal(bench, config);
  const std::uint64_t before = maintenance_events(bench);
  std::uint64_t done = 0;
  while (done < params.warmup_cap_txns && maintenance_events(bench) - before < goal) {
    const std::uint64_t n = std::min(kWarmChunk, params.warmup_cap_txns - done);
    runner.run(n);
    done += n;
  }
  // Dirty frames still buffered are dropped; the workbench never saw them.
  return bench;
}

std::vector<ResultRow> run_tpcc_lite(const std::vector<DriverKind>& kinds,
                                     const BenchConfig& config,
                                     const TpccLiteParams& params) {
  params.validate(config.geometry.data_bytes);
  std::vector<ResultRow> rows;
  const WorkloadParams wp = config.workload();
  for (DriverKind kind : kinds) {
    const Workbench warm = tpcc_warm_up(kind, config, params);
    for (double pct : params.buffer_pcts) {
      Workbench bench = warm;
      const std::size_t frames = tpcc_frames(pct, config.db_pages);
      TpccLiteRunner runner(bench, params, frames, config.seed + kTpccDbSeed,
                            config.seed + kTpccSeed);
      runner.run(params.settle_txns);
      const TpccTally t = runner.run(params.measure_txns);
      if (config.verify) bench.verify_all();
      WorkloadParams shape = wp;
      shape.n_updates_till_write = 0;
      shape.pct_changed_by_one_op = 0;
      shape.pct_update_ops = 100.0 * params.updates_per_txn / params.touches_per_txn;
      ResultRow row = make_row(7, driver_label(kind), shape, t.io, config.timing);
      row.buffer_pct = pct;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace flashdiff
