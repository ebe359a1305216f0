#include "flashdiff/diff_codec.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "flashdiff/errors.hpp"

namespace flashdiff {

std::size_t Differential::changed_bytes() const {
  std::size_t n = 0;
  for (const auto& r : runs) n += r.data.size();
  return n;
}

void DiffBudget::validate(std::size_t data_bytes) const {
  if (max_differential_size == 0 || max_differential_size > data_bytes) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "max_differential_size must be in (0, data_bytes]");
  }
}

Differential compute_differential(std::span<const Byte> base,
                                  std::span<const Byte> current,
                                  std::uint32_t page_id,
                                  std::uint64_t timestamp) {
  if (base.size() != current.size()) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "differential of pages with different sizes");
  }
  Differential d{page_id, timestamp, {}};
  const std::size_t n = base.size();
  std::size_t i = 0;
  while (i < n) {
    if (base[i] == current[i]) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    std::size_t end = i + 1;  // one past the last differing byte
    for (;;) {
      std::size_t k = end;
      while (k < n && base[k] == current[k] && k - end < kRunHeaderBytes) ++k;
      if (k < n && k - end < kRunHeaderBytes && base[k] != current[k]) {
        end = k + 1;  // gap shorter than a run header: fold it in
        continue;
      }
      i = k;
      break;
    }
    Run run;
    run.offset = static_cast<std::uint16_t>(start);
    run.data.assign(current.begin() + static_cast<std::ptrdiff_t>(start),
                    current.begin() + static_cast<std::ptrdiff_t>(end));
    d.runs.push_back(std::move(run));
  }
  return d;
}

void apply_differential_in_place(std::span<Byte> page, const Differential& d) {
  for (const auto& run : d.runs) {
    if (run.data.empty() || run.end() > page.size()) {
      throw FlashError(ErrorCode::kCorruption,
                       "run at offset " + std::to_string(run.offset) +
                           " does not fit the page");
    }
    std::memcpy(page.data() + run.offset, run.data.data(), run.data.size());
  }
}

std::vector<Byte> apply_differential(std::span<const Byte> base,
                                     const Differential& d) {
  std::vector<Byte> page(base.begin(), base.end());
  apply_differential_in_place(page, d);
  return page;
}

std::size_t encoded_size(const Differential& d) {
  std::size_t size = kRecordHeaderBytes;
  for (const auto& run : d.runs) size += kRunHeaderBytes + run.data.size();
  return size;
}

namespace {

template <typename T>
void append_le(std::vector<Byte>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<Byte>(value >> (8 * i)));
  }
}

template <typename T>
T read_le(const Byte* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(p[i]) << (8 * i);
  }
  return value;
}

// Cursor over packed records. Returns false at padding / end of input.
class RecordReader {
 public:
  RecordReader(std::span<const Byte> bytes, std::size_t page_bytes)
      : bytes_(bytes), page_bytes_(page_bytes) {}

  // Parses the next header; on success `pos_` points at the first run.
  bool next_header(std::uint32_t& page_id, std::uint64_t& ts,
                   std::uint16_t& runs) {
    const std::size_t left = bytes_.size() - pos_;
    if (left == 0) return false;
    if (left < kRecordHeaderBytes) {
      if (std::all_of(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                      bytes_.end(), [](Byte b) { return b == kErasedByte; })) {
        return false;
      }
      throw FlashError(ErrorCode::kDecode, "truncated record header");
    }
    const Byte* p = bytes_.data() + pos_;
    runs = read_le<std::uint16_t>(p + 12);
    if (runs == kPaddingRunCount) return false;
    page_id = read_le<std::uint32_t>(p);
    ts = read_le<std::uint64_t>(p + 4);
    pos_ += kRecordHeaderBytes;
    return true;
  }

  // Reads (or skips when `out` is null) one run.
  void run(Run* out) {
    if (bytes_.size() - pos_ < kRunHeaderBytes) {
      throw FlashError(ErrorCode::kDecode, "truncated run header");
    }
    const Byte* p = bytes_.data() + pos_;
    const auto offset = read_le<std::uint16_t>(p);
    const auto length = read_le<std::uint16_t>(p + 2);
    pos_ += kRunHeaderBytes;
    if (length == 0 || std::size_t{offset} + length > page_bytes_) {
      throw FlashError(ErrorCode::kDecode,
                       "run [" + std::to_string(offset) + ", +" +
                           std::to_string(length) + ") outside the page");
    }
    if (bytes_.size() - pos_ < length) {
      throw FlashError(ErrorCode::kDecode, "truncated run payload");
    }
    if (out) {
      out->offset = offset;
      out->data.assign(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                       bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + length));
    }
    pos_ += length;
  }

 private:
  std::span<const Byte> bytes_;
  std::size_t page_bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void encode_append(const Differential& d, std::vector<Byte>& out) {
  if (d.runs.size() >= kPaddingRunCount) {
    throw FlashError(ErrorCode::kInvalidArgument, "too many runs");
  }
  out.reserve(out.size() + encoded_size(d));
  append_le<std::uint32_t>(out, d.page_id);
  append_le<std::uint64_t>(out, d.timestamp);
  append_le<std::uint16_t>(out, static_cast<std::uint16_t>(d.runs.size()));
  for (const auto& run : d.runs) {
    append_le<std::uint16_t>(out, run.offset);
    append_le<std::uint16_t>(out, static_cast<std::uint16_t>(run.data.size()));
    out.insert(out.end(), run.data.begin(), run.data.end());
  }
}

std::vector<Byte> encode(const Differential& d) {
  std::vector<Byte> out;
  encode_append(d, out);
  return out;
}

std::vector<Differential> decode(std::span<const Byte> bytes,
                                 std::size_t page_bytes) {
  std::vector<Differential> result;
  RecordReader reader(bytes, page_bytes);
  Differential d;
  std::uint16_t runs = 0;
  while (reader.next_header(d.page_id, d.timestamp, runs)) {
    d.runs.resize(runs);
    for (auto& run : d.runs) reader.run(&run);
    result.push_back(std::move(d));
    d = {};
  }
  return result;
}

std::optional<Differential> decode_find(std::span<const Byte> bytes,
                                        std::size_t page_bytes,
                                        std::uint32_t page_id) {
  RecordReader reader(bytes, page_bytes);
  Differential d;
  std::uint16_t runs = 0;
  while (reader.next_header(d.page_id, d.timestamp, runs)) {
    if (d.page_id == page_id) {
      d.runs.resize(runs);
      for (auto& run : d.runs) reader.run(&run);
      return d;
    }
    for (std::uint16_t i = 0; i < runs; ++i) reader.run(nullptr);
  }
  return std::nullopt;
}

void decode_matching(std::span<const Byte> bytes, std::size_t page_bytes,
                     std::uint32_t page_id, std::vector<Differential>& out) {
  RecordReader reader(bytes, page_bytes);
  Differential d;
  std::uint16_t runs = 0;
  while (reader.next_header(d.page_id, d.timestamp, runs)) {
    if (d.page_id == page_id) {
      d.runs.resize(runs);
      for (auto& run : d.runs) reader.run(&run);
      out.push_back(std::move(d));
      d = {};
    } else {
      for (std::uint16_t i = 0; i < runs; ++i) reader.run(nullptr);
    }
  }
}

}  // namespace flashdiff
