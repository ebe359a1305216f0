#include "flashdiff/recovery.hpp"

#include <optional>
#include <random>
#include <string>

#include "flashdiff/errors.hpp"
#include "flashdiff/workload.hpp"

namespace flashdiff {

namespace {

struct Slot {
  std::optional<PhysPageAddr> base;
  std::uint64_t base_ts = 0;
  std::optional<PhysPageAddr> differential;
  std::uint64_t differential_ts = 0;
};

class Rebuilder {
 public:
  explicit Rebuilder(FlashChip& chip) : chip_(chip) {}

  RecoveryResult run() {
    const OpCounts before = chip_.counts();
    const auto& g = chip_.geometry();
    std::vector<Byte> data(g.data_bytes);
    for (std::uint32_t b = 0; b < g.n_blocks; ++b) {
      for (std::uint32_t p = 0; p < g.pages_per_block; ++p) {
        const PhysPageAddr r{b, p};
        const SpareArea spare = chip_.read_page(r, std::span<Byte>(data));
        ++result_.pages_scanned;
        if (spare.type == PageType::kFree || spare.obsolete) continue;
        if (spare.type == PageType::kBase) {
          on_base(r, spare);
        } else if (spare.type == PageType::kDifferential) {
          on_differential(r, data);
        } else {
          warn("ignoring " + std::string(to_string(spare.type)) + " page at " +
               to_string(r));
        }
      }
    }
    // Differentials whose base never showed up cannot be materialized.
    for (auto& [id, slot] : slots_) {
      if (!slot.base && slot.differential) {
        warn("differential of page " + std::to_string(id) + " has no base page");
        decrease(*slot.differential);
      }
    }
    for (const auto& [id, slot] : slots_) {
      if (!slot.base) continue;
      result_.mapping.emplace(
          id, MappingEntry{*slot.base, slot.base_ts, slot.differential,
                           slot.differential ? slot.differential_ts : 0});
    }
    for (const auto& [addr, count] : counts_) {
      if (count != 0) result_.valid_counts.emplace(addr, count);
    }
    result_.ops = chip_.counts() - before;
    return std::move(result_);
  }

 private:
  void on_base(PhysPageAddr r, const SpareArea& spare) {
    if (!spare.page_id || !spare.timestamp) {
      warn("base page without id or timestamp at " + to_string(r));
      return;
    }
    const std::uint64_t ts = *spare.timestamp;
    note_ts(ts);
    Slot& slot = slots_[*spare.page_id];
    if (slot.base && ts <= slot.base_ts) {
      obsolete(r);
      return;
    }
    if (slot.base) obsolete(*slot.base);
    slot.base = r;
    slot.base_ts = ts;
    if (slot.differential && slot.differential_ts < ts) {
      decrease(*slot.differential);
      slot.differential.reset();
    }
  }

  void on_differential(PhysPageAddr r, std::span<const Byte> data) {
    std::vector<Differential> records;
    try {
      records = decode(data, data.size());
    } catch (const FlashError& e) {
      warn("undecodable differential page at " + to_string(r) + ": " + e.what());
      return;
    }
    std::uint32_t& count = counts_[r];
    for (const auto& d : records) {
      note_ts(d.timestamp);
      Slot& slot = slots_[d.page_id];
      if (slot.base && d.timestamp <= slot.base_ts) continue;
      if (slot.differential && d.timestamp <= slot.differential_ts) continue;
      if (slot.differential) decrease(*slot.differential);
      slot.differential = r;
      slot.differential_ts = d.timestamp;
      ++count;
    }
    if (count == 0) obsolete(r);
  }

  void decrease(PhysPageAddr page) {
    auto& count = counts_.at(page);
    if (--count == 0) obsolete(page);
  }

  void obsolete(PhysPageAddr page) {
    chip_.set_obsolete(page);
    ++result_.pages_obsoleted;
  }

  void note_ts(std::uint64_t ts) {
    if (ts > result_.max_timestamp) result_.max_timestamp = ts;
  }

  void warn(std::string message) { result_.warnings.push_back(std::move(message)); }

  FlashChip& chip_;
  std::map<PageId, Slot> slots_;
  std::map<PhysPageAddr, std::uint32_t> counts_;
  RecoveryResult result_;
};

}  // namespace

RecoveryResult recover(FlashChip& chip) { return Rebuilder(chip).run(); }

Micros scan_cost(const FlashGeometry& geometry, const TimingProfile& timing) {
  return geometry.total_pages() * timing.t_read;
}

Micros scan_cost(const ChipImage& image, const TimingProfile& timing) {
  return scan_cost(image.geometry, timing);
}

std::vector<Byte> materialize(const FlashChip& chip, PageId id,
                              const MappingEntry& entry) {
  const auto base = chip.peek_data(entry.base);
  std::vector<Byte> page(base.begin(), base.end());
  if (entry.differential) {
    auto d = decode_find(chip.peek_data(*entry.differential), page.size(), id);
    if (!d) {
      throw FlashError(ErrorCode::kCorruption,
                       "differential of page " + std::to_string(id) + " missing");
    }
    apply_differential_in_place(page, *d);
  }
  return page;
}

CrashOutcome inject_crash(Driver& driver, std::uint64_t crash_point,
                          const std::function<void(Driver&)>& script) {
  FlashChip& chip = driver.chip();
  const std::uint64_t start = chip.mutation_count();
  chip.arm_crash(crash_point);
  CrashOutcome outcome;
  try {
    script(driver);
  } catch (const CrashInjected&) {
    outcome.crashed = true;
  }
  chip.disarm_crash();
  outcome.completed_mutations = chip.mutation_count() - start;
  outcome.image = chip.image();
  return outcome;
}

DriverConfig CrashScript::driver_config() const {
  DriverConfig c;
  c.geometry = geometry();
  c.logical_pages = db_pages;
  return c;
}

void CrashScript::load(Driver& driver) const {
  for (PageId id = 0; id < db_pages; ++id) {
    driver.load(id, initial_page(id, seed, driver.chip().geometry().data_bytes));
  }
  driver.write_through();
}

void CrashScript::run(Driver& driver, Observer* observer) const {
  WorkloadParams params;
  params.db_pages = db_pages;
  params.page_bytes = driver.chip().geometry().data_bytes;
  params.seed = seed;
  WorkloadGenerator gen(params);
  std::mt19937_64 rng(seed + 1);
  // Change sizes from a few bytes to whole pages exercise all three write
  // cases of PDL(256B) and PDL(2KB).
  static constexpr double kPct[] = {0.5, 2, 5, 20, 60, 100};
  std::uniform_int_distribution<std::size_t> pick_pct(0, std::size(kPct) - 1);
  std::uniform_int_distribution<PageId> pick_page(0, db_pages - 1);
  std::uniform_int_distribution<int> percent(0, 99);
  for (std::uint32_t i = 1; i <= ops; ++i) {
    const PageId id = pick_page(rng);
    auto page = driver.read_logical(id);
    if (percent(rng) < 80) {
      const std::size_t bytes = changed_bytes_per_op(kPct[pick_pct(rng)], page.size());
      const UpdateLog log = apply_change(page, gen.make_change(bytes));
      driver.write_logical(id, page, std::span<const UpdateLog>(&log, 1));
      if (observer) observer->on_write(id, page);
    }
    if (i % write_through_every == 0) {
      driver.write_through();
      if (observer) observer->on_write_through();
    }
  }
}

}  // namespace flashdiff
