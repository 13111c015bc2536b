#include "rrbd/harness/page_codec.hpp"

#include <algorithm>

namespace rrbd::harness {

namespace {

std::uint8_t pattern(model::ValueId v, std::size_t i) {
  std::uint64_t x = v * 0x9e3779b97f4a7c15ull + i;
  x ^= x >> 29;
  x *= 0xbf58476d1ce4e5b9ull;
  return static_cast<std::uint8_t>(x >> 56);
}

}  // namespace

Bytes encode_page(model::ValueId value, std::size_t block_size) {
  if (block_size < 8) throw std::invalid_argument("block size below 8 bytes");
  Bytes page;
  page.reserve(block_size);
  put_le(page, value);
  for (std::size_t i = 8; i < block_size; ++i) page.push_back(pattern(value, i));
  return page;
}

model::ValueId decode_page(ByteView page) {
  if (std::all_of(page.begin(), page.end(), [](std::uint8_t b) { return b == 0; })) {
    return model::kInitialValue;
  }
  if (page.size() < 8) return kGarbage;
  Reader r(page);
  const auto v = r.le<std::uint64_t>();
  if (v == model::kInitialValue || v == kGarbage) return kGarbage;
  for (std::size_t i = 8; i < page.size(); ++i) {
    if (page[i] != pattern(v, i)) return kGarbage;
  }
  return v;
}

}  // namespace rrbd::harness
