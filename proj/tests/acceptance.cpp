// Acceptance checks. Prints one PASS/FAIL line per criterion with the
// measured values behind it, and exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "crash_oracle.hpp"
#include "flashdiff/experiment.hpp"
#include "flashdiff/pdl_driver.hpp"
#include "flashdiff/recovery.hpp"
#include "flashdiff/tpcc_lite.hpp"
#include "flashdiff/workbench.hpp"

namespace fd = flashdiff;
using Kind = fd::DriverKind;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string fmt_counts(const fd::OpCounts& c) {
  return std::to_string(c.reads) + "r/" + std::to_string(c.writes) + "w/" +
         std::to_string(c.erases) + "e";
}

// Rows of one driver, keyed by label.
const fd::ResultRow& row_of(const std::vector<fd::ResultRow>& rows, Kind kind) {
  const auto label = fd::driver_label(kind);
  for (const auto& r : rows) {
    if (r.driver == label) return r;
  }
  throw std::runtime_error("no row for " + label);
}

std::vector<fd::ResultRow> rows_of(const std::vector<fd::ResultRow>& rows, Kind kind) {
  std::vector<fd::ResultRow> out;
  for (const auto& r : rows) {
    if (r.driver == fd::driver_label(kind)) out.push_back(r);
  }
  return out;
}

// Checks that `value(kinds[i])` is strictly decreasing along `kinds`.
void require_descending(Verdict& v, const std::vector<Kind>& kinds,
                        const std::function<double(Kind)>& value, const std::string& what) {
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    v.detail << (i ? " > " : "") << fd::driver_label(kinds[i]) << " " << fmt(value(kinds[i]));
  }
  for (std::size_t i = 0; i + 1 < kinds.size(); ++i) {
    v.require(value(kinds[i]) > value(kinds[i + 1]),
              what + ": " + fd::driver_label(kinds[i]) + " > " + fd::driver_label(kinds[i + 1]));
  }
}

// --- criteria -----------------------------------------------------------------

Verdict c1_cost_model() {
  Verdict v;
  fd::DriverConfig config;
  config.geometry = fd::FlashGeometry::desk(16);
  config.logical_pages = 256;
  fd::WorkloadParams params;
  params.db_pages = config.logical_pages;
  params.pct_changed_by_one_op = 2.0;
  fd::WorkloadGenerator gen(params);
  fd::Operation op;
  op.page = 70;
  op.update = true;
  op.changes.push_back(gen.make_change(fd::changed_bytes_per_op(2.0, 2048)));

  auto one_update = [&](Kind kind) {
    fd::Workbench bench(kind, config, 1);
    fd::Tally t;
    bench.execute(op, t);
    return t;
  };
  const auto opu = one_update(Kind::kOpu);
  v.detail << "OPU " << fmt_counts(opu.total());
  v.require(opu.total() == (fd::OpCounts{1, 2, 0}), "OPU 1 read + 2 writes");

  const auto ipu = one_update(Kind::kIpu);
  v.detail << "; IPU write " << fmt_counts(ipu.write_step);
  v.require(ipu.write_step == (fd::OpCounts{63, 64, 1}), "IPU 63 reads + 64 writes + 1 erase");
  v.require(ipu.read_step == (fd::OpCounts{1, 0, 0}), "IPU read step 1 read");

  for (Kind kind : {Kind::kPdl256, Kind::kPdl2k}) {
    const auto pdl = one_update(kind);
    v.detail << "; " << fd::driver_label(kind) << " " << fmt_counts(pdl.total());
    v.require(pdl.total().reads >= 1 && pdl.total().reads <= 2 && pdl.total().writes == 0,
              fd::driver_label(kind) + " 1-2 reads, write buffered");

    // Over many such updates every flush programs exactly one page, and
    // the buffered differentials amortize to at most one write per flush.
    fd::Workbench bench(kind, config, 1);
    fd::WorkloadGenerator stream(params);
    const auto t = bench.run(stream, 2000);
    const auto s = bench.driver().stats();
    const auto spare = bench.driver().chip().ledger().spare_writes;
    const auto data_writes = t.total().writes - t.maintenance.writes - spare;
    v.require(data_writes == s.buffer_flushes + s.diff_case3,
              fd::driver_label(kind) + " one data write per flush");
    v.require(bench.max_reads_per_read() <= 2, fd::driver_label(kind) + " reads <= 2");
    v.detail << " (" << t.updates << " updates: " << s.buffer_flushes << " flushes + "
             << s.diff_case3 << " new bases = " << data_writes << " data writes)";
  }
  return v;
}

Verdict c2_exp1() {
  Verdict v;
  const auto rows = fd::run_exp1(fd::all_driver_kinds(), fd::BenchConfig{});
  auto read = [&](Kind k) { return row_of(rows, k).read_us; };
  auto write = [&](Kind k) { return row_of(rows, k).write_us; };
  v.detail << "read us: ";
  require_descending(v, {Kind::kIpl64, Kind::kIpl18}, read, "read");
  const double pdl_min = std::min(read(Kind::kPdl2k), read(Kind::kPdl256));
  const double pdl_max = std::max(read(Kind::kPdl2k), read(Kind::kPdl256));
  v.detail << " > PDL " << fmt(pdl_min) << ".." << fmt(pdl_max) << " > OPU " << fmt(read(Kind::kOpu));
  v.require(read(Kind::kIpl18) > pdl_max, "read: IPL(18KB) > PDL");
  v.require(pdl_min > read(Kind::kOpu), "read: PDL > OPU");
  v.detail << "; write us: ";
  require_descending(v, {Kind::kIpu, Kind::kOpu, Kind::kPdl2k, Kind::kPdl256}, write, "write");
  return v;
}

Verdict c3_exp2() {
  Verdict v;
  const std::vector<Kind> kinds = {Kind::kIpl18, Kind::kIpl64, Kind::kOpu, Kind::kIpu, Kind::kPdl2k};
  const auto rows = fd::run_exp2(kinds, fd::BenchConfig{});
  for (Kind k : {Kind::kIpl18, Kind::kIpl64}) {
    const auto rs = rows_of(rows, k);
    int steps = 0;
    v.detail << fd::driver_label(k) << " ";
    for (std::size_t i = 0; i < rs.size(); ++i) {
      v.detail << (i ? "," : "") << fmt(rs[i].overall_us);
      if (i == 0) continue;
      v.require(rs[i].overall_us >= rs[i - 1].overall_us, fd::driver_label(k) + " non-decreasing");
      // A step: one more log write per reflection shows up as a jump of
      // well over the noise between neighbouring points.
      if (rs[i].overall_us > rs[i - 1].overall_us * 1.05) ++steps;
    }
    v.detail << " (" << steps << " steps); ";
    v.require(steps >= 1, fd::driver_label(k) + " has a step");
  }
  for (Kind k : {Kind::kOpu, Kind::kIpu}) {
    const auto rs = rows_of(rows, k);
    double lo = rs.front().overall_us;
    double hi = lo;
    for (const auto& r : rs) {
      lo = std::min(lo, r.overall_us);
      hi = std::max(hi, r.overall_us);
    }
    const double spread = (hi - lo) / lo;
    v.detail << fd::driver_label(k) << " spread " << fmt(100 * spread) << "%; ";
    v.require(spread <= 0.01, fd::driver_label(k) + " flat within 1%");
  }
  const auto pdl = rows_of(rows, Kind::kPdl2k);
  const double growth = (pdl.back().overall_us - pdl.front().overall_us) / pdl.front().overall_us;
  v.detail << "PDL(2KB) " << fmt(pdl.front().overall_us) << " -> " << fmt(pdl.back().overall_us)
           << " (" << fmt(100 * growth) << "%)";
  v.require(growth < 0.15, "PDL(2KB) grows < 15%");
  return v;
}

Verdict c4_exp4() {
  Verdict v;
  const std::vector<Kind> kinds = {Kind::kOpu, Kind::kPdl2k, Kind::kPdl256, Kind::kIpl18};
  for (std::uint64_t seed : {1, 2, 3}) {
    fd::BenchConfig config;
    config.seed = seed;
    const auto rows = fd::run_exp4(kinds, config);
    std::map<std::uint32_t, std::map<double, std::map<std::string, double>>> grid;
    for (const auto& r : rows) grid[r.n_updates_till_write][r.pct_update_ops][r.driver] = r.overall_us;
    v.detail << "seed " << seed << ":";
    for (const auto& [n, by_pct] : grid) {
      const auto opu = fd::driver_label(Kind::kOpu);
      const auto pdl2k = fd::driver_label(Kind::kPdl2k);
      const auto pdl256 = fd::driver_label(Kind::kPdl256);
      const auto ipl18 = fd::driver_label(Kind::kIpl18);
      const auto& zero = by_pct.begin()->second;
      v.require(by_pct.begin()->first == 0.0 && zero.at(opu) < zero.at(pdl2k),
                "seed " + std::to_string(seed) + " N=" + std::to_string(n) +
                    ": OPU beats PDL(2KB) at 0% updates");
      // Crossover: the lowest percentage from which PDL(256B) wins at
      // every higher point.
      std::optional<double> crossover;
      for (auto it = by_pct.rbegin(); it != by_pct.rend(); ++it) {
        if (it->second.at(pdl256) < it->second.at(opu)) {
          crossover = it->first;
        } else {
          break;
        }
      }
      v.require(crossover.has_value(), "seed " + std::to_string(seed) + " N=" +
                                           std::to_string(n) + ": PDL(256B)/OPU crossover");
      for (const auto& [pct, cell] : by_pct) {
        v.require(cell.at(pdl256) < cell.at(ipl18),
                  "seed " + std::to_string(seed) + " N=" + std::to_string(n) +
                      ": PDL(256B) beats IPL(18KB) at " + fmt(pct) + "%");
      }
      v.detail << " N=" << n << " 0%: OPU " << fmt(zero.at(opu)) << " < PDL(2KB) "
               << fmt(zero.at(pdl2k)) << ", crossover "
               << (crossover ? fmt(*crossover) + "%" : std::string("none"));
    }
    v.detail << "; ";
  }
  return v;
}

Verdict c5_exp6() {
  Verdict v;
  const std::vector<Kind> order = {Kind::kOpu, Kind::kPdl2k, Kind::kIpl18, Kind::kPdl256, Kind::kIpl64};
  const auto rows = fd::run_exp6(order, fd::BenchConfig{}, {1});
  v.detail << "erases/update: ";
  require_descending(v, order, [&](Kind k) { return row_of(rows, k).erases_per_update * 1000; },
                     "erases");
  v.detail << " (x1e-3)";
  return v;
}

Verdict c6_recovery() {
  Verdict v;
  const fd::CrashScript script;  // 500 ops, write-through every 50
  for (Kind kind : {Kind::kPdl256, Kind::kPdl2k}) {
    const auto r = crash_oracle::sweep(kind, script);
    v.detail << fd::driver_label(kind) << " " << r.points << " crash points, " << r.failures
             << " inconsistent, " << r.not_idempotent << " not idempotent; ";
    v.require(r.failures == 0, r.first_failure);
    v.require(r.not_idempotent == 0, "idempotent recovery");
    v.require(r.crashed + 1 == r.points, "every point but the last crashes");
  }
  return v;
}

Verdict c7_scan_cost() {
  Verdict v;
  // 1 GiB of data in 2 KiB pages, 64 pages per block.
  const auto g = fd::FlashGeometry::desk(8192);
  const double s = static_cast<double>(fd::scan_cost(g, fd::TimingProfile::table1())) / 1e6;
  v.detail << g.total_pages() << " pages, scan " << s << " s simulated";
  v.require(g.data_capacity() == (std::uint64_t{1} << 30), "1 GiB of data");
  v.require(std::abs(s - 60.0) <= 6.0, "within 10% of 60 s");
  return v;
}

Verdict c8_oracle() {
  Verdict v;
  const fd::BenchConfig config;
  for (Kind kind : fd::all_driver_kinds()) {
    fd::Workbench bench(kind, config.driver_config(), config.seed);
    const std::uint64_t total = kind == Kind::kIpu ? 5000 : 100000;
    // Four phases of different change sizes and update shares.
    struct Phase {
      double pct_changed;
      double pct_update;
      std::uint32_t n;
    };
    const Phase phases[] = {{2, 100, 1}, {0.5, 50, 4}, {20, 80, 2}, {100, 30, 1}};
    std::uint64_t done = 0;
    for (std::size_t i = 0; i < std::size(phases); ++i) {
      fd::WorkloadParams p = config.workload();
      p.pct_changed_by_one_op = phases[i].pct_changed;
      p.pct_update_ops = phases[i].pct_update;
      p.n_updates_till_write = phases[i].n;
      p.seed = config.seed * 100 + i;
      fd::WorkloadGenerator gen(p);
      const std::uint64_t n = i + 1 == std::size(phases) ? total - done : total / 4;
      bench.run(gen, n);  // every read is checked against the shadow copy
      done += n;
    }
    bench.driver().write_through();
    bench.verify_all();
    v.detail << fd::driver_label(kind) << " " << done << " ops";
    if (kind == Kind::kPdl256 || kind == Kind::kPdl2k) {
      v.detail << " (max " << bench.max_reads_per_read() << " reads/read)";
      v.require(bench.max_reads_per_read() <= 2, fd::driver_label(kind) + " reads <= 2");
    }
    v.detail << "; ";
  }
  return v;
}

Verdict c9_tpcc() {
  Verdict v;
  const std::vector<Kind> order = {Kind::kIpl64, Kind::kIpl18, Kind::kOpu, Kind::kPdl2k, Kind::kPdl256};
  const fd::TpccLiteParams params;
  const auto rows = fd::run_tpcc_lite(order, fd::BenchConfig{}, params);
  for (double pct : params.buffer_pcts) {
    v.detail << pct << "%: ";
    require_descending(
        v, order,
        [&](Kind k) {
          for (const auto& r : rows) {
            if (r.driver == fd::driver_label(k) && r.buffer_pct == pct) return r.overall_us;
          }
          throw std::runtime_error("missing TPC-C-lite row");
        },
        "buffer " + fmt(pct) + "%");
    v.detail << "; ";
  }
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Verdict (*run)();
  };
  const Criterion criteria[] = {
      {"C1 cost-model exactness", c1_cost_model},
      {"C2 Exp. 1 read/write ordering", c2_exp1},
      {"C3 Exp. 2 shape", c3_exp2},
      {"C4 Exp. 4 crossover over 3 seeds", c4_exp4},
      {"C5 Exp. 6 longevity ordering", c5_exp6},
      {"C6 recovery at every crash point", c6_recovery},
      {"C7 scan cost of a 1 GiB chip", c7_scan_cost},
      {"C8 shadow oracle over 100k ops per driver", c8_oracle},
      {"C9 Exp. 7 TPC-C-lite ordering", c9_tpcc},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s (%.1f s): %s\n", v.pass ? "PASS" : "FAIL", c.name, secs,
                v.detail.str().c_str());
    std::fflush(stdout);
    if (!v.pass) ++failed;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed,
              std::size(criteria));
  return failed == 0 ? 0 : 1;
}
