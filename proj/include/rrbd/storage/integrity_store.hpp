#pragma once

// Per-block leaves (GCM tag + write index + key epoch) organized as a Merkle
// tree of arity 128. The bottom L layers live in the metadata region at the
// end of the disk; everything above stays in memory, including the root. Every
// entry read from disk is checked against its parent before use.

#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "rrbd/storage/cipher.hpp"
#include "rrbd/storage/virtual_disk.hpp"

namespace rrbd::storage {

class IntegrityFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MerkleGeometry {
 public:
  static constexpr std::size_t kArity = 128;
  static constexpr std::size_t kEntry = 32;

  MerkleGeometry(std::uint64_t leaves, std::uint32_t disk_layers);

  std::size_t layers() const { return sizes_.size(); }
  std::uint64_t layer_size(std::size_t k) const { return sizes_[k]; }
  // Requested L clamped so that the root always stays in memory.
  std::uint32_t disk_layers() const { return disk_layers_; }
  std::uint64_t disk_bytes() const;
  std::uint64_t memory_bytes() const;
  std::uint64_t metadata_blocks(std::size_t block_size) const;
  // Byte offset of layer k inside the metadata region (k < disk_layers()).
  std::uint64_t layer_offset(std::size_t k) const;

 private:
  std::vector<std::uint64_t> sizes_;
  std::uint32_t disk_layers_;
};

class IntegrityStore {
 public:
  // Formats a fresh tree of empty leaves (writing the on-disk layers when
  // disk_layers > 0). `metadata_base` is the first block of the region.
  IntegrityStore(const CipherContext& cipher, std::uint64_t leaves, std::uint32_t disk_layers,
                 VirtualDisk* disk = nullptr, BlockId metadata_base = 0);

  void put(BlockId block, const Leaf& leaf);
  // Throws IntegrityFault if an on-disk layer fails verification.
  Leaf get(BlockId block) const;
  std::vector<Leaf> all() const;
  // Replaces every leaf and rebuilds the tree.
  void load(const std::vector<Leaf>& leaves);

  std::uint64_t leaves() const { return geometry_.layer_size(0); }
  const MerkleGeometry& geometry() const { return geometry_; }
  std::uint64_t memory_bytes() const { return geometry_.memory_bytes(); }
  Digest root() const;

  // Mutation hook: trust on-disk entries without checking them.
  void set_skip_verification(bool skip) { skip_verification_ = skip; }

 private:
  using Entry = std::array<std::uint8_t, 32>;

  bool on_disk(std::size_t k) const { return k < geometry_.disk_layers(); }
  Bytes group(std::size_t k, std::uint64_t g) const;
  Bytes raw_group(std::size_t k, std::uint64_t g) const;
  void write_group(std::size_t k, std::uint64_t g, const Bytes& bytes);
  Entry entry(std::size_t k, std::uint64_t i) const;
  void set_entry(std::size_t k, std::uint64_t i, const Entry& e);
  Entry hash_group(const Bytes& bytes) const;
  Bytes read_meta(std::uint64_t offset, std::size_t len) const;
  void write_meta(std::uint64_t offset, const Bytes& bytes);
  void rebuild(const std::vector<Entry>& leaf_entries);

  const CipherContext& cipher_;
  MerkleGeometry geometry_;
  VirtualDisk* disk_;
  BlockId metadata_base_;
  bool skip_verification_ = false;
  // memory_[k] for k >= disk_layers(); lower slots unused.
  std::vector<std::vector<Entry>> memory_;
  mutable std::mutex mu_;
};

}  // namespace rrbd::storage
