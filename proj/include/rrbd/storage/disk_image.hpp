#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "rrbd/bytes.hpp"

namespace rrbd::storage {

// Byte-exact capture of a disk's persisted tier. Pages not present are zero.
//
// File layout (little endian): "RSHD", version u32, block_size u32,
// num_blocks u64, merkle_disk_layers u32, then num_blocks pages. The metadata
// region is the tail of the page array.
struct DiskImage {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t block_size = 4096;
  std::uint64_t num_blocks = 0;
  std::uint32_t merkle_disk_layers = 0;
  std::map<std::uint64_t, Bytes> pages;

  Bytes page(std::uint64_t block) const;
  Bytes serialize() const;
  static DiskImage deserialize(ByteView data);
  void save(const std::string& path) const;
  static DiskImage load(const std::string& path);
  bool operator==(const DiskImage&) const = default;
};

}  // namespace rrbd::storage
