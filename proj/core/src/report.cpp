#include "flashdiff/report.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "flashdiff/errors.hpp"

namespace flashdiff {

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename T>
std::string fmt_int(T v) {
  return std::to_string(v);
}

std::vector<std::string> fields(const ResultRow& r) {
  return {fmt_int(r.experiment), r.driver, fmt_int(r.n_updates_till_write),
          fmt(r.pct_changed),    fmt(r.pct_update_ops), fmt(r.buffer_pct),
          fmt_int(r.t_read),     fmt_int(r.t_write),    fmt_int(r.t_erase),
          fmt_int(r.ops),        fmt_int(r.updates),    fmt(r.read_us),
          fmt(r.write_us),       fmt(r.gc_us),          fmt(r.overall_us),
          fmt(r.reads_per_op),   fmt(r.writes_per_op),  fmt(r.erases_per_update)};
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

template <typename T>
T parse_num(const std::string& s, const char* column) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw FlashError(ErrorCode::kDecode,
                     std::string("bad value '") + s + "' in column " + column);
  }
  return v;
}

}  // namespace

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "experiment", "driver",     "n_updates_till_write", "pct_changed",
      "pct_update_ops", "buffer_pct", "t_read",           "t_write",
      "t_erase",    "ops",        "updates",              "read_us",
      "write_us",   "gc_us",      "overall_us",           "reads_per_op",
      "writes_per_op", "erases_per_update"};
  return cols;
}

void write_csv(const std::vector<ResultRow>& rows, std::ostream& out) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : rows) {
    if (r.driver.find(',') != std::string::npos) {
      throw FlashError(ErrorCode::kInvalidArgument, "driver name contains a comma");
    }
    const auto f = fields(r);
    for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << f[i];
    out << '\n';
  }
}

void write_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FlashError(ErrorCode::kIo, "cannot open " + path.string());
  write_csv(rows, out);
  if (!out) throw FlashError(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<ResultRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || split(line) != csv_columns()) {
    throw FlashError(ErrorCode::kDecode, "CSV header does not match the schema");
  }
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != csv_columns().size()) {
      throw FlashError(ErrorCode::kDecode, "wrong field count: " + line);
    }
    ResultRow r;
    r.experiment = parse_num<int>(f[0], "experiment");
    r.driver = f[1];
    r.n_updates_till_write = parse_num<std::uint32_t>(f[2], "n_updates_till_write");
    r.pct_changed = parse_num<double>(f[3], "pct_changed");
    r.pct_update_ops = parse_num<double>(f[4], "pct_update_ops");
    r.buffer_pct = parse_num<double>(f[5], "buffer_pct");
    r.t_read = parse_num<Micros>(f[6], "t_read");
    r.t_write = parse_num<Micros>(f[7], "t_write");
    r.t_erase = parse_num<Micros>(f[8], "t_erase");
    r.ops = parse_num<std::uint64_t>(f[9], "ops");
    r.updates = parse_num<std::uint64_t>(f[10], "updates");
    r.read_us = parse_num<double>(f[11], "read_us");
    r.write_us = parse_num<double>(f[12], "write_us");
    r.gc_us = parse_num<double>(f[13], "gc_us");
    r.overall_us = parse_num<double>(f[14], "overall_us");
    r.reads_per_op = parse_num<double>(f[15], "reads_per_op");
    r.writes_per_op = parse_num<double>(f[16], "writes_per_op");
    r.erases_per_update = parse_num<double>(f[17], "erases_per_update");
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_table(const std::vector<ResultRow>& rows, std::ostream& out) {
  const std::vector<std::string> head = {"exp", "driver", "N", "%chg", "%upd", "buf%",
                                         "t_r", "t_w", "read_us", "write_us", "gc_us",
                                         "overall_us", "reads/op", "writes/op", "erases/upd"};
  std::vector<std::vector<std::string>> cells;
  cells.push_back(head);
  for (const auto& r : rows) {
    auto fixed = [](double v, int prec) {
      std::ostringstream s;
      s << std::fixed << std::setprecision(prec) << v;
      return s.str();
    };
    cells.push_back({std::to_string(r.experiment), r.driver,
                     std::to_string(r.n_updates_till_write), fixed(r.pct_changed, 1),
                     fixed(r.pct_update_ops, 0), fixed(r.buffer_pct, 1),
                     std::to_string(r.t_read), std::to_string(r.t_write),
                     fixed(r.read_us, 1), fixed(r.write_us, 1), fixed(r.gc_us, 1),
                     fixed(r.overall_us, 1), fixed(r.reads_per_op, 3),
                     fixed(r.writes_per_op, 3), fixed(r.erases_per_update, 5)});
  }
  std::vector<std::size_t> width(head.size(), 0);
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << "  ";
      // Names left, numbers right.
      if (i == 1) {
        out << std::left << std::setw(static_cast<int>(width[i])) << row[i];
      } else {
        out << std::right << std::setw(static_cast<int>(width[i])) << row[i];
      }
    }
    out << '\n';
  }
}

}  // namespace flashdiff
