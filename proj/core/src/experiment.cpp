#include "flashdiff/experiment.hpp"

#include <cmath>
#include <string>

#include "flashdiff/errors.hpp"
#include "flashdiff/ipl_driver.hpp"
#include "flashdiff/tpcc_lite.hpp"

namespace flashdiff {

namespace {

constexpr std::uint64_t kAgingSeed = 101;
constexpr std::uint64_t kSteadySeed = 202;
constexpr std::uint64_t kSettleSeed = 303;
constexpr std::uint64_t kMeasureSeed = 404;

std::uint64_t passes(double p, std::uint32_t db_pages) {
  return static_cast<std::uint64_t>(std::llround(p * db_pages));
}

double per(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

// Uniform updates fill every IPL unit at nearly the same pace, so merges come
// in bursts one log cycle apart. Erase counts only mean something over a
// whole cycle.
const IplDriver* as_ipl(const Workbench& bench) {
  return dynamic_cast<const IplDriver*>(&bench.driver());
}

std::uint64_t measured_ops(const Workbench& bench, const BenchConfig& config) {
  if (bench.kind() == DriverKind::kIpu) return config.ipu_measure_ops;
  if (const IplDriver* ipl = as_ipl(bench)) {
    const std::uint64_t cycle = std::uint64_t{ipl->units()} * ipl->slots_per_unit();
    return std::max(config.measure_ops, cycle);
  }
  return config.measure_ops;
}

}  // namespace

std::uint64_t maintenance_events(const Workbench& bench) {
  if (as_ipl(bench)) return bench.driver().stats().merges;
  return bench.driver().chip().counts().erases;
}

std::uint64_t warm_up_goal(const Workbench& bench, const BenchConfig& config) {
  const IplDriver* ipl = as_ipl(bench);
  return static_cast<std::uint64_t>(std::llround(
      config.gc_rounds * (ipl ? ipl->units() : config.geometry.n_blocks)));
}

void BenchConfig::validate() const {
  geometry.validate();
  timing.validate();
  if (db_pages == 0 || db_pages >= geometry.total_pages()) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "database must be smaller than the chip");
  }
  if (measure_ops == 0) {
    throw FlashError(ErrorCode::kInvalidArgument, "measure_ops must be positive");
  }
}

DriverConfig BenchConfig::driver_config() const {
  DriverConfig c;
  c.geometry = geometry;
  c.timing = timing;
  c.logical_pages = db_pages;
  return c;
}

WorkloadParams BenchConfig::workload() const {
  WorkloadParams p;
  p.db_pages = db_pages;
  p.page_bytes = geometry.data_bytes;
  p.seed = seed;
  return p;
}

ResultRow make_row(int experiment, const std::string& driver,
                   const WorkloadParams& params, const Tally& tally,
                   const TimingProfile& timing) {
  ResultRow r;
  r.experiment = experiment;
  r.driver = driver;
  r.n_updates_till_write = params.n_updates_till_write;
  r.pct_changed = params.pct_changed_by_one_op;
  r.pct_update_ops = params.pct_update_ops;
  r.t_read = timing.t_read;
  r.t_write = timing.t_write;
  r.t_erase = timing.t_erase;
  r.ops = tally.ops;
  r.updates = tally.updates;
  r.read_us = per(tally.read_step.cost(timing), tally.ops);
  r.write_us = per(tally.write_step.cost(timing), tally.ops);
  r.gc_us = per(tally.maintenance.cost(timing), tally.ops);
  r.overall_us = r.read_us + r.write_us;
  const OpCounts total = tally.total();
  r.reads_per_op = per(total.reads, tally.ops);
  r.writes_per_op = per(total.writes, tally.ops);
  r.erases_per_update = per(total.erases, tally.updates);
  return r;
}

Workbench warm_up(DriverKind kind, const BenchConfig& config,
                  const WorkloadParams& target) {
  config.validate();
  Workbench bench(kind, config.driver_config(), config.seed);
  // In-place updates keep no state that could age.
  if (kind == DriverKind::kIpu) return bench;

  WorkloadParams aging = target;
  aging.n_updates_till_write = config.aging_updates_till_write;
  aging.pct_update_ops = 100.0;
  aging.seed = config.seed + kAgingSeed;
  WorkloadGenerator aging_gen(aging);
  bench.run(aging_gen, passes(config.aging_passes, config.db_pages));

  WorkloadParams steady = target;
  steady.pct_update_ops = 100.0;
  steady.seed = config.seed + kSteadySeed;
  WorkloadGenerator steady_gen(steady);
  const std::uint64_t goal = warm_up_goal(bench, config);
  const std::uint64_t cap = passes(config.warmup_cap_passes, config.db_pages);
  const std::uint64_t chunk = std::max<std::uint64_t>(1, config.db_pages / 4);
  const std::uint64_t before = maintenance_events(bench);
  std::uint64_t done = 0;
  while (done < cap && maintenance_events(bench) - before < goal) {
    const std::uint64_t n = std::min(chunk, cap - done);
    bench.run(steady_gen, n);
    done += n;
  }
  return bench;
}

Tally measure(Workbench& bench, const BenchConfig& config,
              const WorkloadParams& params) {
  WorkloadParams p = params;
  if (bench.kind() != DriverKind::kIpu && config.settle_ops > 0) {
    p.seed = config.seed + kSettleSeed;
    WorkloadGenerator settle(p);
    bench.run(settle, config.settle_ops);
  }
  p.seed = config.seed + kMeasureSeed;
  WorkloadGenerator gen(p);
  Tally tally = bench.run(gen, measured_ops(bench, config));
  if (config.verify) bench.verify_all();
  return tally;
}

std::vector<ResultRow> run_exp1(const std::vector<DriverKind>& kinds,
                                const BenchConfig& config) {
  std::vector<ResultRow> rows;
  const WorkloadParams params = config.workload();
  for (DriverKind kind : kinds) {
    Workbench bench = warm_up(kind, config, params);
    BenchConfig no_settle = config;
    no_settle.settle_ops = 0;
    const Tally t = measure(bench, no_settle, params);
    rows.push_back(make_row(1, driver_label(kind), params, t, config.timing));
  }
  return rows;
}

namespace {

std::vector<ResultRow> sweep_updates_till_write(int exp,
                                                const std::vector<DriverKind>& kinds,
                                                const BenchConfig& config,
                                                const std::vector<std::uint32_t>& ns) {
  std::vector<ResultRow> rows;
  const WorkloadParams base = config.workload();
  for (DriverKind kind : kinds) {
    const Workbench warm = warm_up(kind, config, base);
    for (std::uint32_t n : ns) {
      Workbench bench = warm;
      WorkloadParams p = base;
      p.n_updates_till_write = n;
      const Tally t = measure(bench, config, p);
      rows.push_back(make_row(exp, driver_label(kind), p, t, config.timing));
    }
  }
  return rows;
}

}  // namespace

std::vector<ResultRow> run_exp2(const std::vector<DriverKind>& kinds,
                                const BenchConfig& config,
                                const std::vector<std::uint32_t>& ns) {
  return sweep_updates_till_write(2, kinds, config, ns);
}

std::vector<ResultRow> run_exp6(const std::vector<DriverKind>& kinds,
                                const BenchConfig& config,
                                const std::vector<std::uint32_t>& ns) {
  return sweep_updates_till_write(6, kinds, config, ns);
}

std::vector<ResultRow> run_exp3(const std::vector<DriverKind>& kinds,
                                const BenchConfig& config) {
  std::vector<ResultRow> rows;
  const WorkloadParams base = config.workload();
  for (DriverKind kind : kinds) {
    const Workbench warm = warm_up(kind, config, base);
    for (std::uint32_t n : {1u, 5u}) {
      for (double pct : exp3_pct_changed()) {
        Workbench bench = warm;
        WorkloadParams p = base;
        p.n_updates_till_write = n;
        p.pct_changed_by_one_op = pct;
        const Tally t = measure(bench, config, p);
        rows.push_back(make_row(3, driver_label(kind), p, t, config.timing));
      }
    }
  }
  return rows;
}

std::vector<ResultRow> run_exp4(const std::vector<DriverKind>& kinds,
                                const BenchConfig& config,
                                const std::vector<std::uint32_t>& ns) {
  std::vector<ResultRow> rows;
  const WorkloadParams base = config.workload();
  for (DriverKind kind : kinds) {
    const Workbench warm = warm_up(kind, config, base);
    for (std::uint32_t n : ns) {
      for (double pct : exp4_pct_update_ops()) {
        Workbench bench = warm;
        WorkloadParams p = base;
        p.n_updates_till_write = n;
        p.pct_update_ops = pct;
        const Tally t = measure(bench, config, p);
        rows.push_back(make_row(4, driver_label(kind), p, t, config.timing));
      }
    }
  }
  return rows;
}

std::vector<ResultRow> run_exp5(const std::vector<DriverKind>& kinds,
                                const BenchConfig& config) {
  std::vector<ResultRow> rows;
  const WorkloadParams params = config.workload();
  for (DriverKind kind : kinds) {
    Workbench bench = warm_up(kind, config, params);
    BenchConfig no_settle = config;
    no_settle.settle_ops = 0;
    const Tally t = measure(bench, no_settle, params);
    for (Micros tw : exp5_t_write()) {
      for (Micros tr : exp5_t_read()) {
        TimingProfile timing{tr, tw, config.timing.t_erase};
        rows.push_back(make_row(5, driver_label(kind), params, t, timing));
      }
    }
  }
  return rows;
}

std::vector<ResultRow> run_experiment(int exp, const std::vector<DriverKind>& kinds,
                                      const BenchConfig& config) {
  switch (exp) {
    case 1: return run_exp1(kinds, config);
    case 2: return run_exp2(kinds, config);
    case 3: return run_exp3(kinds, config);
    case 4: return run_exp4(kinds, config);
    case 5: return run_exp5(kinds, config);
    case 6: return run_exp6(kinds, config);
    case 7: return run_tpcc_lite(kinds, config, TpccLiteParams{});
    default:
      throw FlashError(ErrorCode::kInvalidArgument,
                       "experiment " + std::to_string(exp) + " does not exist");
  }
}

}  // namespace flashdiff
