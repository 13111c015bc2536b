#pragma once

// Online workload generator. Each application thread draws its next operation
// when the previous one returns; reads only target blocks some earlier write
// invocation already touched, so every generated history meets the checker's
// precondition.

#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "rrbd/model/history.hpp"

namespace rrbd::harness {

enum class WorkloadKind { kSeq, kRand, kContended };

WorkloadKind parse_workload(const std::string& s);
std::string to_string(WorkloadKind k);

struct WorkloadParams {
  WorkloadKind kind = WorkloadKind::kRand;
  std::uint64_t blocks = 64;
  std::uint32_t threads = 3;
  std::uint64_t ops = 10;          // application operations per thread
  std::uint64_t fsync_every = 0;   // 0: never
  double read_ratio = 0.3;
  std::uint64_t seed = 1;
};

struct Op {
  bool is_write = true;
  model::BlockId block = 0;
  model::SyncFlags sync = model::SyncFlags::kNone;
  bool app_op = true;  // false for the block I/Os an fsync expands into
};

class Workload {
 public:
  explicit Workload(const WorkloadParams& p);

  // Next op for thread t (0-based), or nullopt when its budget is spent.
  // `written` is the set of blocks with an earlier write invocation.
  std::optional<Op> next(std::uint32_t t, const std::set<model::BlockId>& written);

  bool done(std::uint32_t t) const;
  std::uint64_t issued_app_ops() const { return issued_; }
  const WorkloadParams& params() const { return p_; }
  // Block an fsync writes its commit record to (Table-2 style journal).
  model::BlockId journal_block() const { return p_.blocks - 1; }

 private:
  model::BlockId pick_block(std::uint32_t t);

  struct Thread {
    std::uint64_t app_ops = 0;
    std::uint64_t since_fsync = 0;
    std::vector<Op> queued;  // expanded fsync I/Os, issued back to front
    model::BlockId cursor = 0;
  };

  WorkloadParams p_;
  std::mt19937_64 rng_;
  std::vector<Thread> threads_;
  std::uint64_t issued_ = 0;
};

}  // namespace rrbd::harness
