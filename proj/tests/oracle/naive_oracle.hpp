#pragma once

// Brute-force reference implementations of the block-model definitions.
// Everything here is deliberately literal: happens-before is the transitive
// closure of the base edges, completions are enumerated explicitly, and
// linearizations are every interleaving that keeps per-thread order. There is
// no memoization. Small histories only (at most 64 events after completion).

#include <vector>

#include "rrbd/model/history.hpp"

namespace oracle {

using rrbd::model::History;

// Literal a ≺ b over event indices of h.
bool hb(const History& h, std::size_t a, std::size_t b);

bool linearizable(const History& h);

// Every durable cut of a crash-free era (any completion, any op subset that
// keeps flagged completed writes and is closed under happens-before).
std::vector<History> durable_cuts(const History& era);

bool crash_consistent(const History& h);

}  // namespace oracle
