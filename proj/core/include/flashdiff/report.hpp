#pragma once

// Result tables: CSV (machine-readable, round-trips through parse_csv) and
// an aligned text table for terminals.
//
// CSV columns, in order:
//   experiment, driver, n_updates_till_write, pct_changed, pct_update_ops,
//   buffer_pct, t_read, t_write, t_erase, ops, updates, read_us, write_us,
//   gc_us, overall_us, reads_per_op, writes_per_op, erases_per_update
// Times are simulated microseconds per operation (per transaction for
// experiment 7); write_us includes gc_us. Doubles use the shortest text that
// parses back to the same value.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "flashdiff/experiment.hpp"

namespace flashdiff {

const std::vector<std::string>& csv_columns();

void write_csv(const std::vector<ResultRow>& rows, std::ostream& out);
void write_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
// Throws kDecode on a header or field that does not match the schema.
std::vector<ResultRow> parse_csv(std::istream& in);

void write_table(const std::vector<ResultRow>& rows, std::ostream& out);

}  // namespace flashdiff
