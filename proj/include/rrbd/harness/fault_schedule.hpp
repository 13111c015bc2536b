#pragma once

// Fault schedule: one action per line, `AT_STEP[+MICROS] ACTION ARGS...`.
// AT_STEP counts application operations issued; the action fires MICROS
// simulated microseconds after that operation is issued (step 0 is the start
// of the workload, steps past the end fire once the workload drains).
//
//   crash NODE | snapshot NODE [NAME] | rollback NODE [NAME]
//   crash_rollback NODE [NAME] | corrupt_page NODE BLOCK
//   drop LINK COUNT | dup LINK COUNT | corrupt LINK COUNT
//   delay LINK COUNT MICROS | link_delay LINK MICROS
//   isolate NODE | heal NODE | pause
//
// NODE is a slot number, LINK is FROM>TO. '#' starts a comment line.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rrbd::harness {

enum class FaultKind {
  kCrash,
  kSnapshot,
  kRollback,
  kCrashRollback,
  kCorruptPage,
  kDrop,
  kDup,
  kCorrupt,
  kDelay,
  kLinkDelay,
  kIsolate,
  kHeal,
  kPause,
};

struct FaultAction {
  std::uint64_t step = 0;
  std::uint64_t micros = 0;
  FaultKind kind = FaultKind::kPause;
  std::uint32_t node = 0;
  std::uint32_t to = 0;  // link target
  std::uint64_t count = 0;
  std::uint64_t arg = 0;  // block or delay
  std::string name = "default";
};

class FaultParseError : public std::runtime_error {
 public:
  FaultParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

std::vector<FaultAction> parse_faults(const std::string& text);
std::vector<FaultAction> load_faults(const std::string& path);
std::string format_fault(const FaultAction& a);
std::string format_faults(const std::vector<FaultAction>& actions);

}  // namespace rrbd::harness
