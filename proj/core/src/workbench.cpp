#include "flashdiff/workbench.hpp"

#include <algorithm>
#include <string>

namespace flashdiff {

namespace {

bool is_pdl(DriverKind kind) {
  return kind == DriverKind::kPdl256 || kind == DriverKind::kPdl2k;
}

}  // namespace

Tally& Tally::operator+=(const Tally& o) {
  ops += o.ops;
  updates += o.updates;
  reflections += o.reflections;
  read_step += o.read_step;
  write_step += o.write_step;
  maintenance += o.maintenance;
  return *this;
}

Workbench::Workbench(DriverKind kind, const DriverConfig& config, std::uint64_t seed)
    : kind_(kind), driver_(make_driver(kind, config)) {
  shadow_.reserve(config.logical_pages);
  for (PageId id = 0; id < config.logical_pages; ++id) {
    shadow_.push_back(initial_page(id, seed, config.geometry.data_bytes));
    driver_->load(id, shadow_.back());
  }
}

Workbench::Workbench(const Workbench& other)
    : kind_(other.kind_),
      driver_(other.driver_->clone()),
      shadow_(other.shadow_),
      max_reads_per_read_(other.max_reads_per_read_),
      max_pages_per_reflection_(other.max_pages_per_reflection_) {}

std::vector<Byte> Workbench::read_page(PageId id, Tally& tally) {
  const OpCounts before = driver_->chip().counts();
  auto page = driver_->read_logical(id);
  const OpCounts delta = driver_->chip().counts() - before;
  tally.read_step += delta;
  max_reads_per_read_ = std::max(max_reads_per_read_, delta.reads);
  if (page != shadow_.at(id)) {
    throw OracleMismatch(driver_->name() + " returned stale content for page " +
                         std::to_string(id));
  }
  if (is_pdl(kind_) && delta.reads > 2) {
    throw OracleMismatch("PDL read of page " + std::to_string(id) + " took " +
                         std::to_string(delta.reads) + " chip reads");
  }
  return page;
}

void Workbench::write_page(PageId id, std::span<const Byte> page,
                           std::span<const UpdateLog> logs, Tally& tally) {
  const OpCounts before = driver_->chip().counts();
  const std::uint64_t spare_before = driver_->chip().ledger().spare_writes;
  const OpCounts maint_before = driver_->stats().maintenance;
  driver_->write_logical(id, page, logs);
  const OpCounts delta = driver_->chip().counts() - before;
  const OpCounts maint = driver_->stats().maintenance - maint_before;
  const std::uint64_t spare = driver_->chip().ledger().spare_writes - spare_before;
  tally.write_step += delta;
  tally.maintenance += maint;
  ++tally.reflections;
  shadow_.at(id).assign(page.begin(), page.end());
  // Data pages programmed outside GC; spare-only programs are obsolescence marks.
  const std::uint64_t programmed = delta.writes - maint.writes - spare;
  max_pages_per_reflection_ = std::max(max_pages_per_reflection_, programmed);
  if (is_pdl(kind_) && programmed > 1) {
    throw OracleMismatch("PDL reflection of page " + std::to_string(id) +
                         " programmed " + std::to_string(programmed) + " pages");
  }
}

void Workbench::execute(const Operation& op, Tally& tally) {
  ++tally.ops;
  auto page = read_page(op.page, tally);
  if (!op.update) return;
  ++tally.updates;
  std::vector<UpdateLog> logs;
  logs.reserve(op.changes.size());
  for (const auto& change : op.changes) logs.push_back(apply_change(page, change));
  write_page(op.page, page, logs, tally);
}

Tally Workbench::run(WorkloadGenerator& gen, std::uint64_t count) {
  Tally tally;
  for (std::uint64_t i = 0; i < count; ++i) execute(gen.next(), tally);
  return tally;
}

void Workbench::verify_all() {
  for (PageId id = 0; id < shadow_.size(); ++id) {
    if (driver_->read_logical(id) != shadow_[id]) {
      throw OracleMismatch(driver_->name() + " lost page " + std::to_string(id));
    }
  }
}

}  // namespace flashdiff
