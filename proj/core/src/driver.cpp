#include "flashdiff/driver.hpp"

#include <algorithm>
#include <cctype>

#include "flashdiff/errors.hpp"
#include "flashdiff/ipl_driver.hpp"
#include "flashdiff/ipu_driver.hpp"
#include "flashdiff/opu_driver.hpp"
#include "flashdiff/pdl_driver.hpp"

namespace flashdiff {

void Driver::check_id(PageId id) const {
  if (id >= logical_pages_) {
    throw FlashError(ErrorCode::kAddress, "logical page " + std::to_string(id) +
                                              " >= " + std::to_string(logical_pages_));
  }
}

void Driver::check_page(std::span<const Byte> page) const {
  if (page.size() != chip_.geometry().data_bytes) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "logical page of " + std::to_string(page.size()) + " bytes");
  }
}

DriverStats Driver::base_stats() const {
  DriverStats s;
  s.name = name();
  s.chip = chip_.counts();
  s.spare_writes = chip_.ledger().spare_writes;
  s.logical_reads = logical_reads_;
  s.logical_writes = logical_writes_;
  return s;
}

namespace {

struct KindNames {
  DriverKind kind;
  const char* label;
  const char* cli;
};

constexpr KindNames kKinds[] = {
    {DriverKind::kPdl256, "PDL(256B)", "pdl256"},
    {DriverKind::kPdl2k, "PDL(2KB)", "pdl2k"},
    {DriverKind::kOpu, "OPU", "opu"},
    {DriverKind::kIpu, "IPU", "ipu"},
    {DriverKind::kIpl18, "IPL(18KB)", "ipl18"},
    {DriverKind::kIpl64, "IPL(64KB)", "ipl64"},
};

const KindNames& names(DriverKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k;
  }
  throw FlashError(ErrorCode::kInvalidArgument, "unknown driver kind");
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

}  // namespace

std::string driver_label(DriverKind kind) { return names(kind).label; }
std::string driver_cli_name(DriverKind kind) { return names(kind).cli; }

DriverKind parse_driver_kind(const std::string& name) {
  const std::string key = lower(name);
  for (const auto& k : kKinds) {
    if (key == k.cli || key == lower(k.label)) return k.kind;
  }
  throw FlashError(ErrorCode::kInvalidArgument, "unknown driver '" + name + "'");
}

const std::vector<DriverKind>& all_driver_kinds() {
  static const std::vector<DriverKind> kinds = {
      DriverKind::kIpl64, DriverKind::kIpl18, DriverKind::kPdl2k,
      DriverKind::kPdl256, DriverKind::kOpu, DriverKind::kIpu};
  return kinds;
}

std::unique_ptr<Driver> make_driver(DriverKind kind, const DriverConfig& config) {
  switch (kind) {
    case DriverKind::kPdl256:
      return std::make_unique<PdlDriver>(config, DiffBudget{kPdl256MaxDifferential});
    case DriverKind::kPdl2k:
      return std::make_unique<PdlDriver>(config, DiffBudget{kPdl2kMaxDifferential});
    case DriverKind::kOpu:
      return std::make_unique<OpuDriver>(config);
    case DriverKind::kIpu:
      return std::make_unique<IpuDriver>(config);
    case DriverKind::kIpl18:
      return std::make_unique<IplDriver>(
          config, IplLayout::from_log_bytes(kIpl18LogBytes, config.geometry));
    case DriverKind::kIpl64:
      return std::make_unique<IplDriver>(
          config, IplLayout::from_log_bytes(kIpl64LogBytes, config.geometry));
  }
  throw FlashError(ErrorCode::kInvalidArgument, "unknown driver kind");
}

}  // namespace flashdiff
