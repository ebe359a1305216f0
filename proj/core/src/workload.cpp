#include "flashdiff/workload.hpp"

#include <algorithm>
#include <cmath>

#include "flashdiff/errors.hpp"

namespace flashdiff {

void WorkloadParams::validate() const {
  auto pct_ok = [](double p) { return p >= 0.0 && p <= 100.0; };
  if (!pct_ok(pct_changed_by_one_op) || !pct_ok(pct_update_ops)) {
    throw FlashError(ErrorCode::kInvalidArgument, "percentages must lie in [0, 100]");
  }
  if (db_pages == 0 || page_bytes == 0) {
    throw FlashError(ErrorCode::kInvalidArgument, "empty database");
  }
  if (n_updates_till_write == 0) {
    throw FlashError(ErrorCode::kInvalidArgument, "n_updates_till_write must be >= 1");
  }
}

std::size_t changed_bytes_per_op(double pct, std::size_t page_bytes) {
  return static_cast<std::size_t>(std::llround(pct / 100.0 * static_cast<double>(page_bytes)));
}

WorkloadGenerator::WorkloadGenerator(const WorkloadParams& params)
    : params_(params),
      change_bytes_(changed_bytes_per_op(params.pct_changed_by_one_op, params.page_bytes)),
      op_rng_(params.seed),
      content_rng_(params.seed ^ 0x9e3779b97f4a7c15ULL) {
  params_.validate();
}

Operation WorkloadGenerator::next() {
  Operation op;
  op.page = std::uniform_int_distribution<PageId>(0, params_.db_pages - 1)(op_rng_);
  const double roll = std::uniform_real_distribution<double>(0.0, 100.0)(op_rng_);
  op.update = roll < params_.pct_update_ops;
  if (op.update) {
    op.changes.reserve(params_.n_updates_till_write);
    for (std::uint32_t i = 0; i < params_.n_updates_till_write; ++i) {
      op.changes.push_back(make_change(change_bytes_));
    }
  }
  return op;
}

Change WorkloadGenerator::make_change(std::size_t bytes) {
  Change change;
  const std::size_t page = params_.page_bytes;
  bytes = std::min(bytes, page);
  if (bytes == 0) return change;
  auto& rng = content_rng_;
  const std::size_t k = std::uniform_int_distribution<std::size_t>(
      1, std::min<std::size_t>(4, bytes))(rng);

  // Run lengths: k-1 distinct cut points in [1, bytes-1].
  std::vector<std::size_t> cuts;
  if (k > 1) {
    std::vector<std::size_t> pool(bytes - 1);
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i + 1;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng);
      std::swap(pool[i], pool[j]);
      cuts.push_back(pool[i]);
    }
    std::sort(cuts.begin(), cuts.end());
  }
  cuts.push_back(bytes);
  // Gaps: k sorted draws from [0, free] split the free space into k+1 parts.
  const std::size_t free = page - bytes;
  std::vector<std::size_t> marks(k);
  for (auto& m : marks) m = std::uniform_int_distribution<std::size_t>(0, free)(rng);
  std::sort(marks.begin(), marks.end());

  std::size_t prev_cut = 0;
  std::size_t prev_mark = 0;
  std::size_t pos = 0;
  std::uniform_int_distribution<int> nonzero(1, 255);
  for (std::size_t i = 0; i < k; ++i) {
    pos += marks[i] - prev_mark;
    prev_mark = marks[i];
    const std::size_t len = cuts[i] - prev_cut;
    prev_cut = cuts[i];
    Run run;
    run.offset = static_cast<std::uint16_t>(pos);
    run.data.resize(len);
    for (auto& b : run.data) b = static_cast<Byte>(nonzero(rng));
    change.masks.push_back(std::move(run));
    pos += len;
  }
  return change;
}

UpdateLog apply_change(std::span<Byte> page, const Change& change) {
  UpdateLog log;
  log.reserve(change.masks.size());
  for (const auto& mask : change.masks) {
    if (mask.end() > page.size()) {
      throw FlashError(ErrorCode::kInvalidArgument, "change outside the page");
    }
    Run run;
    run.offset = mask.offset;
    run.data.resize(mask.data.size());
    for (std::size_t i = 0; i < mask.data.size(); ++i) {
      Byte& b = page[mask.offset + i];
      b = static_cast<Byte>(b ^ mask.data[i]);
      run.data[i] = b;
    }
    log.push_back(std::move(run));
  }
  return log;
}

std::vector<Byte> initial_page(PageId id, std::uint64_t seed, std::size_t page_bytes) {
  std::mt19937_64 rng(seed * 0x100000001b3ULL + id);
  std::vector<Byte> page(page_bytes);
  for (std::size_t i = 0; i < page_bytes; i += 8) {
    std::uint64_t v = rng();
    for (std::size_t j = 0; j < 8 && i + j < page_bytes; ++j) {
      page[i + j] = static_cast<Byte>(v >> (8 * j));
    }
  }
  return page;
}

}  // namespace flashdiff
