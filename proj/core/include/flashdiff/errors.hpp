#pragma once

#include <stdexcept>
#include <string>

namespace flashdiff {

enum class ErrorCode {
  kAddress,            // page or block index outside the geometry
  kOverwriteViolation, // a program request needs a 0 -> 1 transition
  kSpareExhausted,     // more than four spare-only programs since erase
  kCorruption,         // on-flash record that cannot be interpreted
  kDecode,             // malformed differential / log encoding
  kNotFound,           // logical page never written
  kCapacity,           // garbage collection could not free a page
  kInvalidArgument,
  kIo,
  kCrashInjected,      // test hook: simulated power loss
};

const char* to_string(ErrorCode code);

class FlashError : public std::runtime_error {
 public:
  FlashError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Thrown by an armed FlashChip in place of the mutation that would have run
// next. Nothing of that mutation reaches the cells.
class CrashInjected : public FlashError {
 public:
  explicit CrashInjected(unsigned long long at)
      : FlashError(ErrorCode::kCrashInjected,
                   "power loss before mutation #" + std::to_string(at)) {}
};

}  // namespace flashdiff
