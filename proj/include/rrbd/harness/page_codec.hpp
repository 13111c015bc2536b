#pragma once

// Application pages carry their value id in the first 8 bytes followed by a
// pattern derived from it, so a page decodes to exactly one id or is garbage.

#include <cstdint>
#include <limits>

#include "rrbd/bytes.hpp"
#include "rrbd/model/history.hpp"

namespace rrbd::harness {

inline constexpr model::ValueId kGarbage = std::numeric_limits<model::ValueId>::max();

Bytes encode_page(model::ValueId value, std::size_t block_size);
// All-zero page -> kInitialValue; anything not produced by encode_page -> kGarbage.
model::ValueId decode_page(ByteView page);

}  // namespace rrbd::harness
