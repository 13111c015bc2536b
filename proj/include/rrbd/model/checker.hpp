#pragma once

// Decision procedures for block device crash consistency.
//
// Histories are evaluated with an implicit initial write of kInitialValue to
// every block placed before the first event, so a read that returns
// kInitialValue is explained by "nothing reached the disk yet". Reads of a
// block that no earlier invocation writes are rejected as a precondition
// violation rather than judged.
//
// Pending operations are resolved as follows: a pending read is always dropped
// (its inserted response could only add constraints); a pending write may be
// completed, with its response placed at the end of its era.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rrbd/model/history.hpp"

namespace rrbd::model {

struct CheckOptions {
  // Explored search states per top-level check.
  std::uint64_t state_budget = 10'000'000;
};

// a ≺ b per the four happens-before criteria (indices into h).
bool happens_before(const History& h, std::size_t a, std::size_t b);

bool is_sequential(const History& h);

// Literal reads-see-writes: every read response is preceded, within one
// crash-free window, by a completed write of the same value to the same block
// with no other write invocation to that block in between.
bool reads_see_writes(const History& h);

// compl(h): every way of completing a subset of the pending invocations. A
// completed read is given the value of the latest write invocation to its
// block that precedes it (or kInitialValue).
std::vector<History> completions(const History& h);

// trunc(h): h without its pending invocations.
History truncate(const History& h);

struct LinearizabilityResult {
  bool linearizable = false;
  // Sequential witness S (only when linearizable).
  History witness;
};

// h must be crash-free. Throws PreconditionViolation, SizeLimitExceeded.
LinearizabilityResult is_linearizable(const History& h, const CheckOptions& options = {});

struct DurableCut {
  // The completion-resolved era H' the cut was taken from.
  History completed;
  // Indices into `completed` of the events kept, ascending.
  std::vector<std::size_t> kept;
  // Indices (into the original era) of the pending write invocations that
  // `completed` resolves with a response.
  std::vector<std::size_t> completed_pending;

  History history() const;
};

// All durable cuts of a crash-free era. Reads appear in a cut only when the
// happens-before closure of a kept write forces them.
std::vector<DurableCut> durable_cuts(const History& era, const CheckOptions& options = {});

// The durable cut whose writes are exactly the given write invocations (indices
// into `era`), or nullopt if no such cut exists.
std::optional<DurableCut> durable_cut_with_writes(const History& era,
                                                  std::span<const std::size_t> write_invocations);

struct CrashConsistencyResult {
  bool consistent = false;
  // Witness durable cut D_i for every era but the last.
  std::vector<History> cuts;
  // First era that could not be linearized under any choice of earlier cuts.
  std::size_t failing_era = 0;
  std::string explanation;
};

CrashConsistencyResult is_crash_consistent(const History& h, const CheckOptions& options = {});

// Same verdict from a single search over all blocks at once; exponential in
// the number of blocks with free writes. Kept as a cross-check.
CrashConsistencyResult is_crash_consistent_joint(const History& h, const CheckOptions& options = {});

// Throws PreconditionViolation if some read invocation targets a block that
// no earlier write invocation touched.
void require_written_before_read(const History& h);

}  // namespace rrbd::model
