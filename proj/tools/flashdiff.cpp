// flashdiff: run the desk-scale experiments, inspect or repair chip images,
// and produce crashed images for the recovery tool.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flashdiff/experiment.hpp"
#include "flashdiff/pdl_driver.hpp"
#include "flashdiff/recovery.hpp"
#include "flashdiff/report.hpp"
#include "flashdiff/tpcc_lite.hpp"

namespace fd = flashdiff;

namespace {

struct RunOptions {
  int exp = 1;
  std::vector<std::string> drivers;
  std::uint64_t seed = 1;
  std::uint32_t blocks = 256;
  double db_mib = 8.0;
  std::string csv;
  std::uint64_t ops = fd::BenchConfig{}.measure_ops;
  std::uint64_t ipu_ops = fd::BenchConfig{}.ipu_measure_ops;
  std::uint64_t settle_ops = fd::BenchConfig{}.settle_ops;
  double gc_rounds = fd::BenchConfig{}.gc_rounds;
  double aging_passes = fd::BenchConfig{}.aging_passes;
  double warmup_cap_passes = fd::BenchConfig{}.warmup_cap_passes;
  fd::Micros t_read = 110;
  fd::Micros t_write = 1010;
  fd::Micros t_erase = 1500;
  bool verify = true;
  bool quiet = false;
};

struct RecoverOptions {
  std::string image;
  std::string repair;
  bool tables = false;
};

struct CrashOptions {
  std::string driver = "pdl2k";
  std::uint64_t seed = 7;
  std::uint32_t db_pages = 150;
  std::uint32_t ops = 500;
  std::uint32_t write_through_every = 50;
  std::uint64_t crash_at = 0;
  std::string image;
};

// Moves `--config FILE` into explicit `--key=value` arguments placed right
// after the subcommand, so that flags given on the command line come later
// and win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    std::size_t span = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      span = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      span = 1;
    } else {
      continue;
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i + span));
    std::vector<std::string> items;
    for (const auto& item : CLI::ConfigINI().from_file(path)) {
      if (item.name == "++" || item.name == "--") continue;  // section markers
      std::string value = item.inputs.empty() ? "" : item.inputs.front();
      items.push_back("--" + item.name + "=" + value);
    }
    const std::size_t at = args.empty() ? 0 : 1;
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), items.begin(), items.end());
    break;
  }
  std::reverse(args.begin(), args.end());
  return args;
}

std::vector<fd::DriverKind> parse_drivers(const std::vector<std::string>& names) {
  if (names.empty()) return fd::all_driver_kinds();
  std::vector<fd::DriverKind> kinds;
  for (const auto& n : names) kinds.push_back(fd::parse_driver_kind(n));
  return kinds;
}

int cmd_run(const RunOptions& o) {
  fd::BenchConfig config;
  config.geometry = fd::FlashGeometry::desk(o.blocks);
  config.timing = {o.t_read, o.t_write, o.t_erase};
  const double pages = o.db_mib * 1024.0 * 1024.0 / config.geometry.data_bytes;
  config.db_pages = static_cast<std::uint32_t>(pages);
  config.seed = o.seed;
  config.measure_ops = o.ops;
  config.ipu_measure_ops = o.ipu_ops;
  config.settle_ops = o.settle_ops;
  config.gc_rounds = o.gc_rounds;
  config.aging_passes = o.aging_passes;
  config.warmup_cap_passes = o.warmup_cap_passes;
  config.verify = o.verify;
  const auto rows = fd::run_experiment(o.exp, parse_drivers(o.drivers), config);
  if (!o.csv.empty()) fd::write_csv(rows, o.csv);
  if (!o.quiet) fd::write_table(rows, std::cout);
  return 0;
}

int cmd_recover(const RecoverOptions& o) {
  const fd::ChipImage image = fd::load_image(o.image);
  fd::FlashChip chip(image, fd::TimingProfile::table1());
  const fd::RecoveryResult r = fd::recover(chip);
  std::cout << "pages scanned      " << r.pages_scanned << '\n'
            << "scan cost (us)     " << r.ops.cost(chip.timing()) << '\n'
            << "logical pages      " << r.mapping.size() << '\n'
            << "with differential  "
            << std::count_if(r.mapping.begin(), r.mapping.end(),
                             [](const auto& kv) { return kv.second.differential.has_value(); })
            << '\n'
            << "differential pages " << r.valid_counts.size() << '\n'
            << "pages obsoleted    " << r.pages_obsoleted << '\n'
            << "max timestamp      " << r.max_timestamp << '\n';
  for (const auto& w : r.warnings) std::cout << "warning: " << w << '\n';
  if (o.tables) {
    std::cout << "\npid  base  base_ts  differential  diff_ts\n";
    for (const auto& [id, e] : r.mapping) {
      std::cout << id << "  " << fd::to_string(e.base) << "  " << e.base_ts << "  "
                << (e.differential ? fd::to_string(*e.differential) : "-") << "  "
                << e.differential_ts << '\n';
    }
    std::cout << "\ndifferential page  valid\n";
    for (const auto& [addr, n] : r.valid_counts) {
      std::cout << fd::to_string(addr) << "  " << n << '\n';
    }
  }
  if (!o.repair.empty()) fd::save_image(chip.image(), o.repair);
  return 0;
}

int cmd_crash(const CrashOptions& o) {
  fd::CrashScript script;
  script.seed = o.seed;
  script.db_pages = o.db_pages;
  script.ops = o.ops;
  script.write_through_every = o.write_through_every;
  auto driver = fd::make_driver(fd::parse_driver_kind(o.driver), script.driver_config());
  script.load(*driver);
  const auto outcome = fd::inject_crash(*driver, o.crash_at,
                                        [&](fd::Driver& d) { script.run(d, nullptr); });
  fd::save_image(outcome.image, o.image);
  std::cout << (outcome.crashed ? "crashed after " : "completed after ")
            << outcome.completed_mutations << " chip mutations\n";
  return 0;
}

// Small randomized checks of every driver against a shadow copy, plus a
// recovery round trip. Prints one line per check.
int cmd_selftest() {
  int failures = 0;
  auto check = [&](const std::string& what, auto&& body) {
    try {
      body();
      std::cout << "PASS  " << what << '\n';
    } catch (const std::exception& e) {
      ++failures;
      std::cout << "FAIL  " << what << ": " << e.what() << '\n';
    }
  };
  fd::BenchConfig config;
  config.geometry = fd::FlashGeometry::desk(32);
  config.db_pages = 512;
  for (fd::DriverKind kind : fd::all_driver_kinds()) {
    check("shadow equivalence " + fd::driver_label(kind), [&] {
      fd::Workbench bench(kind, config.driver_config(), config.seed);
      fd::WorkloadParams p = config.workload();
      p.pct_update_ops = 70;
      p.n_updates_till_write = 3;
      fd::WorkloadGenerator gen(p);
      bench.run(gen, kind == fd::DriverKind::kIpu ? 200 : 5000);
      bench.driver().write_through();
      bench.verify_all();
    });
  }
  check("PDL recovery after write-through", [&] {
    fd::CrashScript script;
    fd::PdlDriver driver(script.driver_config(), fd::DiffBudget{fd::kPdl256MaxDifferential});
    script.load(driver);
    script.run(driver, nullptr);
    driver.write_through();
    fd::FlashChip chip(driver.chip().image(), driver.chip().timing());
    const auto r = fd::recover(chip);
    if (r.mapping != driver.mapping_table() || r.valid_counts != driver.valid_counts()) {
      throw std::runtime_error("recovered tables differ");
    }
    const auto again = fd::recover(chip);
    if (again.pages_obsoleted != 0) throw std::runtime_error("second recovery mutated the chip");
  });
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Page-differential logging workbench over an emulated NAND chip"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Run an experiment (1-7) and print its table");
  run->add_option("--exp", run_opts.exp, "Experiment number")->check(CLI::Range(1, 7));
  run->add_option("--driver", run_opts.drivers,
                  "pdl256|pdl2k|opu|ipu|ipl18|ipl64 (repeatable; default all)")
      ->delimiter(',')
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  run->add_option("--seed", run_opts.seed, "Workload seed");
  run->add_option("--blocks", run_opts.blocks, "Chip size in 64-page blocks");
  run->add_option("--db-mib", run_opts.db_mib, "Database size in MiB");
  run->add_option("--csv", run_opts.csv, "Also write the rows as CSV");
  run->add_option("--ops", run_opts.ops, "Measured operations per point");
  run->add_option("--ipu-ops", run_opts.ipu_ops, "Measured operations per point for IPU");
  run->add_option("--settle-ops", run_opts.settle_ops, "Operations run at a sweep point before measuring");
  run->add_option("--gc-rounds", run_opts.gc_rounds, "Warm-up target: erases per block");
  run->add_option("--aging-passes", run_opts.aging_passes, "Warm-up aging length, in database passes");
  run->add_option("--warmup-cap-passes", run_opts.warmup_cap_passes, "Warm-up cap, in database passes");
  run->add_option("--t-read", run_opts.t_read, "Page read latency (us)");
  run->add_option("--t-write", run_opts.t_write, "Page write latency (us)");
  run->add_option("--t-erase", run_opts.t_erase, "Block erase latency (us)");
  run->add_flag("--verify,!--no-verify", run_opts.verify, "Read back every page after measuring");
  run->add_flag("--quiet", run_opts.quiet, "Do not print the table");
  run->footer("--config FILE reads key=value lines named like the long flags; flags win.");

  RecoverOptions rec_opts;
  auto* rec = app.add_subcommand("recover", "Rebuild PDL tables from a chip image");
  rec->add_option("--image", rec_opts.image, "Chip image file")->required()->check(CLI::ExistingFile);
  rec->add_option("--repair", rec_opts.repair, "Write the image with losers marked obsolete");
  rec->add_flag("--tables", rec_opts.tables, "Print the recovered tables");

  CrashOptions crash_opts;
  auto* crash = app.add_subcommand("crash", "Run the crash script and save the image left at a crash point");
  crash->add_option("--driver", crash_opts.driver, "pdl256 or pdl2k");
  crash->add_option("--seed", crash_opts.seed);
  crash->add_option("--db-pages", crash_opts.db_pages);
  crash->add_option("--ops", crash_opts.ops);
  crash->add_option("--write-through-every", crash_opts.write_through_every);
  crash->add_option("--crash-at", crash_opts.crash_at, "Chip mutations allowed before power loss");
  crash->add_option("--image", crash_opts.image, "Output image file")->required();

  auto* selftest = app.add_subcommand("selftest", "Run the built-in invariant checks");

  try {
    app.parse(expand_config(argc, argv));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "flashdiff: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*rec) return cmd_recover(rec_opts);
    if (*crash) return cmd_crash(crash_opts);
    if (*selftest) return cmd_selftest();
  } catch (const std::exception& e) {
    std::cerr << "flashdiff: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
