#pragma once

// Desk-scale versions of the evaluation: per-driver cost of update
// operations under the synthetic workload, mixes of reads and updates,
// flash timing sweeps, erase counts, and the TPC-C-lite transaction mix.

#include <cstdint>
#include <string>
#include <vector>

#include "flashdiff/driver.hpp"
#include "flashdiff/workbench.hpp"

namespace flashdiff {

struct BenchConfig {
  FlashGeometry geometry = FlashGeometry::desk();
  TimingProfile timing = TimingProfile::table1();
  std::uint32_t db_pages = 4096;  // 8 MiB of 2 KiB pages
  std::uint64_t seed = 1;

  std::uint64_t measure_ops = 20000;
  std::uint64_t ipu_measure_ops = 1000;
  std::uint64_t settle_ops = 8192;  // at the sweep point, before measuring

  // Warm-up: an optional aging pass with many updates per reflection, then
  // the target workload until gc_rounds * n_blocks erases happened (for IPL,
  // gc_rounds merges per unit), capped. IPL measurements also cover at least
  // one full log cycle.
  std::uint32_t aging_updates_till_write = 16;
  double aging_passes = 0.0;          // x db_pages operations
  double gc_rounds = 2.0;
  double warmup_cap_passes = 64.0;    // x db_pages operations

  bool verify = true;  // read back every page after each measurement

  void validate() const;
  DriverConfig driver_config() const;
  WorkloadParams workload() const;  // Exp. 1 defaults for this database
};

struct ResultRow {
  int experiment = 0;
  std::string driver;
  std::uint32_t n_updates_till_write = 1;
  double pct_changed = 0.0;
  double pct_update_ops = 0.0;
  double buffer_pct = 0.0;  // TPC-C-lite only
  Micros t_read = 0;
  Micros t_write = 0;
  Micros t_erase = 0;
  std::uint64_t ops = 0;      // operations, or transactions for Exp. 7
  std::uint64_t updates = 0;
  double read_us = 0.0;       // per op
  double write_us = 0.0;      // per op, includes gc_us
  double gc_us = 0.0;         // per op
  double overall_us = 0.0;    // read_us + write_us
  double reads_per_op = 0.0;
  double writes_per_op = 0.0;
  double erases_per_update = 0.0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

// Fills the timing-dependent columns from chip op counts.
ResultRow make_row(int experiment, const std::string& driver,
                   const WorkloadParams& params, const Tally& tally,
                   const TimingProfile& timing);

// Erases so far, or merges for IPL drivers.
std::uint64_t maintenance_events(const Workbench& bench);
// maintenance_events() a warm-up must add: gc_rounds per block, or per IPL
// unit.
std::uint64_t warm_up_goal(const Workbench& bench, const BenchConfig& config);

// Builds the database and brings it to steady state for `target`.
Workbench warm_up(DriverKind kind, const BenchConfig& config,
                  const WorkloadParams& target);

// Settles a copy of `warm` at `params`, then measures. The same seeds are
// used for every sweep point.
Tally measure(Workbench& bench, const BenchConfig& config,
              const WorkloadParams& params);

std::vector<ResultRow> run_exp1(const std::vector<DriverKind>& kinds, const BenchConfig& config);
// Exp. 2 and 6 sweep N_updates_till_write, Exp. 3 and 4 run at each N in
// `ns`. Every sweep point starts from a copy of one warm database.
std::vector<ResultRow> run_exp2(const std::vector<DriverKind>& kinds, const BenchConfig& config,
                                const std::vector<std::uint32_t>& ns = {1, 2, 3, 4, 5, 6, 7, 8});
std::vector<ResultRow> run_exp3(const std::vector<DriverKind>& kinds, const BenchConfig& config);
std::vector<ResultRow> run_exp4(const std::vector<DriverKind>& kinds, const BenchConfig& config,
                                const std::vector<std::uint32_t>& ns = {1, 5});
// Exp. 5 re-prices the Exp. 1 op counts: the drivers' behaviour does not
// depend on latencies, so the grid needs no reruns.
std::vector<ResultRow> run_exp5(const std::vector<DriverKind>& kinds, const BenchConfig& config);
std::vector<ResultRow> run_exp6(const std::vector<DriverKind>& kinds, const BenchConfig& config,
                                const std::vector<std::uint32_t>& ns = {1, 2, 3, 4, 5, 6, 7, 8});

// Dispatches 1..7 (7 uses default TPC-C-lite parameters).
std::vector<ResultRow> run_experiment(int exp, const std::vector<DriverKind>& kinds,
                                      const BenchConfig& config);

inline const std::vector<double>& exp3_pct_changed() {
  static const std::vector<double> v = {0.1, 1, 2, 5, 10, 20, 50, 100};
  return v;
}
inline const std::vector<double>& exp4_pct_update_ops() {
  static const std::vector<double> v = {0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
  return v;
}
inline const std::vector<Micros>& exp5_t_read() {
  static const std::vector<Micros> v = {10, 50, 110, 200, 500, 1000, 1500};
  return v;
}
inline const std::vector<Micros>& exp5_t_write() {
  static const std::vector<Micros> v = {500, 1000};
  return v;
}

}  // namespace flashdiff
