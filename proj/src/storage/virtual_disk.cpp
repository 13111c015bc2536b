#include "rrbd/storage/virtual_disk.hpp"

#include <algorithm>

namespace rrbd::storage {

VirtualDisk::VirtualDisk(sim::Simulator& sim, std::size_t block_size, std::uint64_t num_blocks,
                         LatencyModel latency, std::uint64_t seed)
    : sim_(sim), block_size_(block_size), num_blocks_(num_blocks), latency_(latency), rng_(seed) {}

std::uint64_t VirtualDisk::draw(std::uint64_t lo, std::uint64_t hi) {
  return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng_);
}

void VirtualDisk::check(BlockId block) const {
  if (block >= num_blocks_) {
    throw OutOfRange("block " + std::to_string(block) + " beyond " + std::to_string(num_blocks_));
  }
}

const Bytes* VirtualDisk::latest(BlockId block) const {
  if (auto v = volatile_.find(block); v != volatile_.end() && !v->second.empty()) {
    return &v->second.back();
  }
  if (auto p = persisted_.find(block); p != persisted_.end()) return &p->second;
  return nullptr;
}

void VirtualDisk::submit_write(BlockId block, Bytes page, SyncFlags sync, WriteDone done) {
  check(block);
  if (page.size() != block_size_) throw std::invalid_argument("write payload must be one block");
  std::uint64_t epoch;
  {
    std::lock_guard lock(mu_);
    epoch = epoch_;
    ++in_flight_;
  }
  const sim::Time delay = draw(latency_.min_us, latency_.max_us);
  sim_.schedule(delay, [this, epoch, block, sync, page = std::move(page), done = std::move(done)]() mutable {
    {
      std::lock_guard lock(mu_);
      if (epoch != epoch_) return;
      --in_flight_;
      if (model::has_preflush(sync)) {
        for (auto& [b, log] : volatile_) {
          if (!log.empty()) persisted_[b] = std::move(log.back());
          log.clear();
        }
      }
      if (model::has_fua(sync)) {
        persisted_[block] = std::move(page);
        volatile_[block].clear();
      } else {
        volatile_[block].push_back(std::move(page));
      }
    }
    done();
  });
}

void VirtualDisk::submit_read(BlockId block, ReadDone done) {
  check(block);
  std::uint64_t epoch;
  {
    std::lock_guard lock(mu_);
    epoch = epoch_;
    ++in_flight_;
  }
  const sim::Time delay = draw(latency_.min_us, latency_.max_us);
  sim_.schedule(delay, [this, epoch, block, done = std::move(done)] {
    Bytes page;
    {
      std::lock_guard lock(mu_);
      if (epoch != epoch_) return;
      --in_flight_;
      const Bytes* p = latest(block);
      page = p ? *p : Bytes(block_size_, 0);
    }
    done(std::move(page));
  });
}

Bytes VirtualDisk::read_now(BlockId block) const {
  check(block);
  std::lock_guard lock(mu_);
  const Bytes* p = latest(block);
  return p ? *p : Bytes(block_size_, 0);
}

void VirtualDisk::write_durable(BlockId block, ByteView page) {
  check(block);
  if (page.size() != block_size_) throw std::invalid_argument("write payload must be one block");
  std::lock_guard lock(mu_);
  persisted_[block] = Bytes(page.begin(), page.end());
  volatile_[block].clear();
}

void VirtualDisk::crash() {
  std::map<BlockId, std::size_t> keep;
  {
    std::lock_guard lock(mu_);
    for (const auto& [b, log] : volatile_) {
      if (!log.empty()) keep[b] = draw(0, log.size());
    }
  }
  crash(keep);
}

void VirtualDisk::crash(const std::map<BlockId, std::size_t>& keep) {
  std::lock_guard lock(mu_);
  for (auto& [b, log] : volatile_) {
    auto it = keep.find(b);
    const std::size_t k = it == keep.end() ? 0 : std::min(it->second, log.size());
    if (k > 0) persisted_[b] = std::move(log[k - 1]);
    log.clear();
  }
  ++epoch_;
  in_flight_ = 0;
}

std::size_t VirtualDisk::in_flight() const {
  std::lock_guard lock(mu_);
  return in_flight_;
}

std::size_t VirtualDisk::volatile_entries(BlockId block) const {
  std::lock_guard lock(mu_);
  auto it = volatile_.find(block);
  return it == volatile_.end() ? 0 : it->second.size();
}

Bytes VirtualDisk::persisted_page(BlockId block) const {
  check(block);
  std::lock_guard lock(mu_);
  auto it = persisted_.find(block);
  return it == persisted_.end() ? Bytes(block_size_, 0) : it->second;
}

DiskImage VirtualDisk::snapshot() const {
  std::lock_guard lock(mu_);
  DiskImage img;
  img.block_size = static_cast<std::uint32_t>(block_size_);
  img.num_blocks = num_blocks_;
  img.merkle_disk_layers = layers_;
  for (const auto& [b, page] : persisted_) {
    if (std::any_of(page.begin(), page.end(), [](std::uint8_t x) { return x != 0; })) {
      img.pages.emplace(b, page);
    }
  }
  return img;
}

void VirtualDisk::restore(const DiskImage& image) {
  if (image.block_size != block_size_ || image.num_blocks != num_blocks_) {
    throw std::invalid_argument("disk image geometry mismatch");
  }
  std::lock_guard lock(mu_);
  persisted_ = image.pages;
  volatile_.clear();
}

void VirtualDisk::corrupt(BlockId block, std::size_t offset) {
  check(block);
  std::lock_guard lock(mu_);
  offset %= block_size_;
  auto& p = persisted_[block];
  if (p.empty()) p.assign(block_size_, 0);
  p[offset] ^= 0x5a;
  for (auto& page : volatile_[block]) page[offset] ^= 0x5a;
}

}  // namespace rrbd::storage
