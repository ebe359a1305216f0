#include "flashdiff/flash_chip.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <limits>

#include "flashdiff/errors.hpp"

namespace flashdiff {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAddress: return "address error";
    case ErrorCode::kOverwriteViolation: return "overwrite violation";
    case ErrorCode::kSpareExhausted: return "spare exhausted";
    case ErrorCode::kCorruption: return "corruption";
    case ErrorCode::kDecode: return "decode error";
    case ErrorCode::kNotFound: return "not found";
    case ErrorCode::kCapacity: return "capacity exhausted";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kIo: return "I/O error";
    case ErrorCode::kCrashInjected: return "crash injected";
  }
  return "unknown error";
}

std::string to_string(PhysPageAddr addr) {
  return "(" + std::to_string(addr.block) + "," + std::to_string(addr.page) +
         ")";
}

const char* to_string(PageType type) {
  switch (type) {
    case PageType::kBase: return "base";
    case PageType::kDifferential: return "differential";
    case PageType::kOriginal: return "original";
    case PageType::kLog: return "log";
    case PageType::kData: return "data";
    case PageType::kFree: return "free";
  }
  return "unknown";
}

void FlashGeometry::validate() const {
  if (n_blocks == 0 || pages_per_block == 0 || data_bytes == 0 ||
      spare_bytes == 0) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "geometry fields must be positive");
  }
  if (data_bytes > 0xFFFF) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "data area larger than 2-byte offsets can address");
  }
  if (spare_bytes < SpareArea::kEncodedBytes || spare_bytes > 0xFFFF ||
      pages_per_block > 0xFFFF) {
    throw FlashError(ErrorCode::kInvalidArgument, "unsupported page layout");
  }
}

void TimingProfile::validate() const {
  if (t_read == 0 || t_write == 0 || t_erase == 0) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "timing values must be positive");
  }
}

namespace {

template <typename T>
void put_le(std::span<Byte> out, std::size_t offset, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out[offset + i] = static_cast<Byte>(value >> (8 * i));
  }
}

template <typename T>
T get_le(std::span<const Byte> in, std::size_t offset) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    value |= static_cast<T>(in[offset + i]) << (8 * i);
  }
  return value;
}

}  // namespace

void SpareArea::encode(std::span<Byte> spare) const {
  std::fill(spare.begin(), spare.end(), kErasedByte);
  spare[kTypeOffset] = static_cast<Byte>(type);
  put_le<std::uint32_t>(spare, kPageIdOffset,
                        page_id.value_or(std::numeric_limits<std::uint32_t>::max()));
  put_le<std::uint64_t>(
      spare, kTimestampOffset,
      timestamp.value_or(std::numeric_limits<std::uint64_t>::max()));
  spare[kObsoleteOffset] = obsolete ? 0x00 : kErasedByte;
}

SpareArea SpareArea::decode(std::span<const Byte> spare) {
  SpareArea s;
  s.type = static_cast<PageType>(spare[kTypeOffset]);
  auto pid = get_le<std::uint32_t>(spare, kPageIdOffset);
  if (pid != std::numeric_limits<std::uint32_t>::max()) s.page_id = pid;
  auto ts = get_le<std::uint64_t>(spare, kTimestampOffset);
  if (ts != std::numeric_limits<std::uint64_t>::max()) s.timestamp = ts;
  // Any cleared bit in the flag byte means obsolete.
  s.obsolete = spare[kObsoleteOffset] != kErasedByte;
  return s;
}

FlashChip::FlashChip(FlashGeometry geometry, TimingProfile timing)
    : geometry_(geometry), timing_(timing) {
  geometry_.validate();
  timing_.validate();
  const auto pages = geometry_.total_pages();
  cells_.assign(pages * geometry_.page_bytes(), kErasedByte);
  spare_writes_.assign(pages, 0);
  programmed_.assign(pages, false);
  obsolete_in_block_.assign(geometry_.n_blocks, 0);
  programmed_in_block_.assign(geometry_.n_blocks, 0);
  ledger_.erase_count_per_block.assign(geometry_.n_blocks, 0);
}

FlashChip::FlashChip(const ChipImage& image, TimingProfile timing)
    : FlashChip(image.geometry, timing) {
  if (image.cells.size() != cells_.size()) {
    throw FlashError(ErrorCode::kCorruption,
                     "image size does not match its geometry");
  }
  cells_ = image.cells;
  const auto pages = geometry_.total_pages();
  for (std::size_t i = 0; i < pages; ++i) {
    const Byte* d = data_ptr(i);
    const Byte* s = spare_ptr(i);
    bool any = std::any_of(d, d + geometry_.data_bytes,
                           [](Byte b) { return b != kErasedByte; }) ||
               std::any_of(s, s + geometry_.spare_bytes,
                           [](Byte b) { return b != kErasedByte; });
    const auto block = static_cast<std::uint32_t>(i / geometry_.pages_per_block);
    if (any) {
      programmed_[i] = true;
      ++programmed_in_block_[block];
    }
    if (s[SpareArea::kObsoleteOffset] != kErasedByte) {
      ++obsolete_in_block_[block];
    }
  }
}

std::size_t FlashChip::page_index(PhysPageAddr addr) const {
  if (addr.block >= geometry_.n_blocks ||
      addr.page >= geometry_.pages_per_block) {
    throw FlashError(ErrorCode::kAddress, "page " + to_string(addr));
  }
  return std::size_t{addr.block} * geometry_.pages_per_block + addr.page;
}

void FlashChip::check_block(std::uint32_t block) const {
  if (block >= geometry_.n_blocks) {
    throw FlashError(ErrorCode::kAddress, "block " + std::to_string(block));
  }
}

Byte* FlashChip::data_ptr(std::size_t index) {
  return cells_.data() + index * geometry_.page_bytes();
}
const Byte* FlashChip::data_ptr(std::size_t index) const {
  return cells_.data() + index * geometry_.page_bytes();
}
Byte* FlashChip::spare_ptr(std::size_t index) {
  return data_ptr(index) + geometry_.data_bytes;
}
const Byte* FlashChip::spare_ptr(std::size_t index) const {
  return data_ptr(index) + geometry_.data_bytes;
}

void FlashChip::begin_mutation() {
  if (crash_at_ && mutations_ >= *crash_at_) {
    throw CrashInjected(mutations_);
  }
}

void FlashChip::program_bytes(Byte* cells, std::span<const Byte> request,
                              PhysPageAddr addr, const char* area) {
  for (std::size_t i = 0; i < request.size(); ++i) {
    if ((request[i] & ~cells[i]) != 0) {
      throw FlashError(ErrorCode::kOverwriteViolation,
                       std::string(area) + " byte " + std::to_string(i) +
                           " of page " + to_string(addr));
    }
  }
  for (std::size_t i = 0; i < request.size(); ++i) cells[i] &= request[i];
}

void FlashChip::note_programmed(std::size_t index, PhysPageAddr addr) {
  if (!programmed_[index]) {
    programmed_[index] = true;
    ++programmed_in_block_[addr.block];
  }
}

SpareArea FlashChip::read_page(PhysPageAddr addr, std::span<Byte> data) {
  const auto index = page_index(addr);
  if (data.size() != geometry_.data_bytes) {
    throw FlashError(ErrorCode::kInvalidArgument, "read buffer size");
  }
  std::memcpy(data.data(), data_ptr(index), geometry_.data_bytes);
  ++ledger_.reads;
  ledger_.sim_time += timing_.t_read;
  return SpareArea::decode({spare_ptr(index), geometry_.spare_bytes});
}

std::vector<Byte> FlashChip::read_page(PhysPageAddr addr, SpareArea* spare) {
  std::vector<Byte> data(geometry_.data_bytes);
  auto s = read_page(addr, std::span<Byte>(data));
  if (spare) *spare = s;
  return data;
}

void FlashChip::write_page(PhysPageAddr addr, std::span<const Byte> data,
                           const SpareArea& spare) {
  const auto index = page_index(addr);
  if (data.size() != geometry_.data_bytes) {
    throw FlashError(ErrorCode::kInvalidArgument,
                     "write of " + std::to_string(data.size()) +
                         " bytes to a " + std::to_string(geometry_.data_bytes) +
                         "-byte page");
  }
  std::vector<Byte> encoded(geometry_.spare_bytes);
  spare.encode(encoded);
  // Validate both areas before touching any cell.
  const Byte* d = data_ptr(index);
  const Byte* s = spare_ptr(index);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if ((data[i] & ~d[i]) != 0) {
      throw FlashError(ErrorCode::kOverwriteViolation,
                       "data byte " + std::to_string(i) + " of page " +
                           to_string(addr));
    }
  }
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    if ((encoded[i] & ~s[i]) != 0) {
      throw FlashError(ErrorCode::kOverwriteViolation,
                       "spare byte " + std::to_string(i) + " of page " +
                           to_string(addr));
    }
  }
  const bool spare_only =
      programmed_[index] && std::equal(data.begin(), data.end(), d);
  if (spare_only && spare_writes_[index] >= kSpareWriteLimit) {
    throw FlashError(ErrorCode::kSpareExhausted, "page " + to_string(addr));
  }
  begin_mutation();
  const bool was_obsolete = s[SpareArea::kObsoleteOffset] != kErasedByte;
  if (spare_only) {
    ++spare_writes_[index];
    ++ledger_.spare_writes;
  }
  program_bytes(data_ptr(index), data, addr, "data");
  program_bytes(spare_ptr(index), encoded, addr, "spare");
  if (!was_obsolete && spare.obsolete) ++obsolete_in_block_[addr.block];
  note_programmed(index, addr);
  ++mutations_;
  ++ledger_.writes;
  ledger_.sim_time += timing_.t_write;
}

void FlashChip::program_partial(PhysPageAddr addr, std::size_t offset,
                                std::span<const Byte> bytes) {
  const auto index = page_index(addr);
  if (offset + bytes.size() > geometry_.data_bytes) {
    throw FlashError(ErrorCode::kAddress, "partial program past page end");
  }
  Byte* cells = data_ptr(index) + offset;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if ((bytes[i] & ~cells[i]) != 0) {
      throw FlashError(ErrorCode::kOverwriteViolation,
                       "data byte " + std::to_string(offset + i) +
                           " of page " + to_string(addr));
    }
  }
  begin_mutation();
  program_bytes(cells, bytes, addr, "data");
  note_programmed(index, addr);
  ++mutations_;
  ++ledger_.writes;
  ledger_.sim_time += timing_.t_write;
}

void FlashChip::set_obsolete(PhysPageAddr addr) {
  const auto index = page_index(addr);
  if (spare_writes_[index] >= kSpareWriteLimit) {
    throw FlashError(ErrorCode::kSpareExhausted, "page " + to_string(addr));
  }
  begin_mutation();
  Byte* flag = spare_ptr(index) + SpareArea::kObsoleteOffset;
  if (*flag == kErasedByte) ++obsolete_in_block_[addr.block];
  *flag = 0x00;
  ++spare_writes_[index];
  note_programmed(index, addr);
  ++mutations_;
  ++ledger_.writes;
  ++ledger_.spare_writes;
  ledger_.sim_time += timing_.t_write;
}

void FlashChip::erase_block(std::uint32_t block) {
  check_block(block);
  begin_mutation();
  const std::size_t first = std::size_t{block} * geometry_.pages_per_block;
  auto begin = cells_.begin() + first * geometry_.page_bytes();
  std::fill(begin, begin + geometry_.block_bytes(), kErasedByte);
  for (std::size_t i = first; i < first + geometry_.pages_per_block; ++i) {
    spare_writes_[i] = 0;
    programmed_[i] = false;
  }
  obsolete_in_block_[block] = 0;
  programmed_in_block_[block] = 0;
  ++mutations_;
  ++ledger_.erases;
  ++ledger_.erase_count_per_block[block];
  ledger_.sim_time += timing_.t_erase;
}

std::span<const Byte> FlashChip::peek_data(PhysPageAddr addr) const {
  return {data_ptr(page_index(addr)), geometry_.data_bytes};
}

SpareArea FlashChip::peek_spare(PhysPageAddr addr) const {
  return SpareArea::decode({spare_ptr(page_index(addr)), geometry_.spare_bytes});
}

bool FlashChip::is_programmed(PhysPageAddr addr) const {
  return programmed_[page_index(addr)];
}

std::uint32_t FlashChip::spare_write_count(PhysPageAddr addr) const {
  return spare_writes_[page_index(addr)];
}

void FlashChip::arm_crash(std::uint64_t mutations) {
  crash_at_ = mutations_ + mutations;
}

void save_image(const ChipImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FlashError(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<Byte> header(kImageHeaderBytes, 0);
  std::span<Byte> h(header);
  std::memcpy(header.data(), "FDIF", 4);
  put_le<std::uint16_t>(h, 4, kImageVersion);
  put_le<std::uint16_t>(h, 6, static_cast<std::uint16_t>(image.geometry.pages_per_block));
  put_le<std::uint32_t>(h, 8, image.geometry.n_blocks);
  put_le<std::uint16_t>(h, 12, static_cast<std::uint16_t>(image.geometry.data_bytes));
  put_le<std::uint16_t>(h, 14, static_cast<std::uint16_t>(image.geometry.spare_bytes));
  out.write(reinterpret_cast<const char*>(header.data()),
            static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(image.cells.data()),
            static_cast<std::streamsize>(image.cells.size()));
  if (!out) throw FlashError(ErrorCode::kIo, "short write to " + path.string());
}

ChipImage load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FlashError(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<Byte> header(kImageHeaderBytes);
  in.read(reinterpret_cast<char*>(header.data()),
          static_cast<std::streamsize>(header.size()));
  if (in.gcount() != static_cast<std::streamsize>(kImageHeaderBytes) ||
      std::memcmp(header.data(), "FDIF", 4) != 0) {
    throw FlashError(ErrorCode::kCorruption, path.string() + ": not a chip image");
  }
  std::span<const Byte> h(header);
  if (get_le<std::uint16_t>(h, 4) != kImageVersion) {
    throw FlashError(ErrorCode::kCorruption,
                     path.string() + ": unsupported image version");
  }
  ChipImage image;
  image.geometry.pages_per_block = get_le<std::uint16_t>(h, 6);
  image.geometry.n_blocks = get_le<std::uint32_t>(h, 8);
  image.geometry.data_bytes = get_le<std::uint16_t>(h, 12);
  image.geometry.spare_bytes = get_le<std::uint16_t>(h, 14);
  image.geometry.validate();
  image.cells.resize(image.geometry.total_pages() * image.geometry.page_bytes());
  in.read(reinterpret_cast<char*>(image.cells.data()),
          static_cast<std::streamsize>(image.cells.size()));
  if (in.gcount() != static_cast<std::streamsize>(image.cells.size())) {
    throw FlashError(ErrorCode::kCorruption, path.string() + ": truncated image");
  }
  return image;
}

}  // namespace flashdiff
