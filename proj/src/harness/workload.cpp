#include "rrbd/harness/workload.hpp"

#include <stdexcept>

namespace rrbd::harness {

using model::SyncFlags;

WorkloadKind parse_workload(const std::string& s) {
  if (s == "seq") return WorkloadKind::kSeq;
  if (s == "rand") return WorkloadKind::kRand;
  if (s == "contended") return WorkloadKind::kContended;
  throw std::invalid_argument("unknown workload '" + s + "'");
}

std::string to_string(WorkloadKind k) {
  switch (k) {
    case WorkloadKind::kSeq: return "seq";
    case WorkloadKind::kRand: return "rand";
    case WorkloadKind::kContended: return "contended";
  }
  return "?";
}

Workload::Workload(const WorkloadParams& p) : p_(p), rng_(p.seed ^ 0x5deece66dull), threads_(p.threads) {
  if (p_.blocks < 2) throw std::invalid_argument("workload needs at least 2 blocks");
  const std::uint64_t data = p_.blocks - 1;
  for (std::uint32_t t = 0; t < p_.threads; ++t) threads_[t].cursor = (data * t) / std::max(1u, p_.threads);
}

bool Workload::done(std::uint32_t t) const {
  return threads_[t].app_ops >= p_.ops && threads_[t].queued.empty();
}

model::BlockId Workload::pick_block(std::uint32_t t) {
  const std::uint64_t data = p_.blocks - 1;  // last block is the journal
  switch (p_.kind) {
    case WorkloadKind::kSeq: {
      const model::BlockId b = threads_[t].cursor;
      threads_[t].cursor = (b + 1) % data;
      return b;
    }
    case WorkloadKind::kRand:
      return std::uniform_int_distribution<std::uint64_t>(0, data - 1)(rng_);
    case WorkloadKind::kContended:
      return std::uniform_int_distribution<std::uint64_t>(0, std::min<std::uint64_t>(data, 3) - 1)(rng_);
  }
  return 0;
}

std::optional<Op> Workload::next(std::uint32_t t, const std::set<model::BlockId>& written) {
  Thread& th = threads_[t];
  if (!th.queued.empty()) {
    Op op = th.queued.back();
    th.queued.pop_back();
    return op;
  }
  if (th.app_ops >= p_.ops) return std::nullopt;
  ++th.app_ops;
  ++issued_;
  Op op;
  const bool want_read = std::uniform_real_distribution<double>(0, 1)(rng_) < p_.read_ratio;
  if (want_read && !written.empty()) {
    auto it = written.begin();
    std::advance(it, std::uniform_int_distribution<std::size_t>(0, written.size() - 1)(rng_));
    op.is_write = false;
    op.block = *it;
  } else {
    op.block = pick_block(t);
  }
  if (p_.fsync_every > 0 && ++th.since_fsync == p_.fsync_every) {
    th.since_fsync = 0;
    // fsync: commit record with FUA|PREFLUSH, then FUA (issued after op).
    th.queued.push_back(Op{true, journal_block(), SyncFlags::kFua, false});
    th.queued.push_back(Op{true, journal_block(), SyncFlags::kFuaPreflush, false});
  }
  return op;
}

}  // namespace rrbd::harness
