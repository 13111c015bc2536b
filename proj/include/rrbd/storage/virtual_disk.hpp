#pragma once

// Simulated block device with a volatile write cache.
//
// A completed write without FUA lands in the block's volatile log; FUA writes
// go straight to the persisted tier. A PREFLUSH write first moves every
// completed write into the persisted tier. A crash keeps, per block, some
// prefix of the volatile log (the last kept entry becomes persisted) and drops
// all in-flight requests.

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>
#include <vector>

#include "rrbd/bytes.hpp"
#include "rrbd/model/history.hpp"
#include "rrbd/sim/simulator.hpp"
#include "rrbd/storage/disk_image.hpp"

namespace rrbd::storage {

using model::BlockId;
using model::SyncFlags;

class OutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct LatencyModel {
  sim::Time min_us = 20;
  sim::Time max_us = 120;
};

class VirtualDisk {
 public:
  using WriteDone = std::function<void()>;
  using ReadDone = std::function<void(Bytes)>;

  // Latencies and crash choices come from a private stream seeded by `seed`.
  VirtualDisk(sim::Simulator& sim, std::size_t block_size, std::uint64_t num_blocks,
              LatencyModel latency = {}, std::uint64_t seed = 1);

  std::size_t block_size() const { return block_size_; }
  std::uint64_t num_blocks() const { return num_blocks_; }

  void submit_write(BlockId block, Bytes page, SyncFlags sync, WriteDone done);
  void submit_read(BlockId block, ReadDone done);

  // Synchronous, durable access used for the metadata region.
  Bytes read_now(BlockId block) const;
  void write_durable(BlockId block, ByteView page);

  // Random suffix point per block.
  void crash();
  // keep[b] = number of volatile entries of block b retained (missing = 0).
  void crash(const std::map<BlockId, std::size_t>& keep);

  std::size_t in_flight() const;
  std::size_t volatile_entries(BlockId block) const;
  Bytes persisted_page(BlockId block) const;

  DiskImage snapshot() const;
  // Replaces the persisted tier and empties the volatile cache. In-flight
  // requests still complete afterwards.
  void restore(const DiskImage& image);
  // Flips one byte of the block's stored page, in every tier.
  void corrupt(BlockId block, std::size_t offset = 0);

  void set_merkle_disk_layers(std::uint32_t l) { layers_ = l; }

 private:
  void check(BlockId block) const;
  const Bytes* latest(BlockId block) const;
  std::uint64_t draw(std::uint64_t lo, std::uint64_t hi);

  sim::Simulator& sim_;
  const std::size_t block_size_;
  const std::uint64_t num_blocks_;
  LatencyModel latency_;
  std::uint32_t layers_ = 0;
  std::mt19937_64 rng_;

  mutable std::mutex mu_;
  std::map<BlockId, Bytes> persisted_;
  std::map<BlockId, std::vector<Bytes>> volatile_;
  std::uint64_t epoch_ = 0;
  std::size_t in_flight_ = 0;
};

}  // namespace rrbd::storage
