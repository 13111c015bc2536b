#include "rrbd/storage/integrity_store.hpp"

#include <algorithm>

namespace rrbd::storage {

MerkleGeometry::MerkleGeometry(std::uint64_t leaves, std::uint32_t disk_layers) {
  if (leaves == 0) throw std::invalid_argument("integrity store needs at least one leaf");
  sizes_.push_back(leaves);
  while (sizes_.back() > 1) sizes_.push_back((sizes_.back() + kArity - 1) / kArity);
  if (sizes_.size() == 1) sizes_.push_back(1);  // a lone leaf still gets an in-memory root
  disk_layers_ = std::min<std::uint32_t>(disk_layers, static_cast<std::uint32_t>(sizes_.size() - 1));
}

std::uint64_t MerkleGeometry::layer_offset(std::size_t k) const {
  std::uint64_t off = 0;
  for (std::size_t j = 0; j < k; ++j) off += ((sizes_[j] + kArity - 1) / kArity) * kArity * kEntry;
  return off;
}

std::uint64_t MerkleGeometry::disk_bytes() const { return layer_offset(disk_layers_); }

std::uint64_t MerkleGeometry::memory_bytes() const {
  std::uint64_t total = 0;
  for (std::size_t k = disk_layers_; k < sizes_.size(); ++k) total += sizes_[k] * kEntry;
  return total;
}

std::uint64_t MerkleGeometry::metadata_blocks(std::size_t block_size) const {
  return (disk_bytes() + block_size - 1) / block_size;
}

IntegrityStore::IntegrityStore(const CipherContext& cipher, std::uint64_t leaves,
                               std::uint32_t disk_layers, VirtualDisk* disk, BlockId metadata_base)
    : cipher_(cipher), geometry_(leaves, disk_layers), disk_(disk), metadata_base_(metadata_base) {
  if (geometry_.disk_layers() > 0) {
    if (!disk_) throw std::invalid_argument("on-disk Merkle layers need a disk");
    if (metadata_base_ + geometry_.metadata_blocks(disk_->block_size()) > disk_->num_blocks()) {
      throw std::invalid_argument("metadata region does not fit on the disk");
    }
  }
  memory_.resize(geometry_.layers());
  rebuild(std::vector<Entry>(leaves));
}

Bytes IntegrityStore::read_meta(std::uint64_t offset, std::size_t len) const {
  const std::size_t bs = disk_->block_size();
  Bytes out;
  out.reserve(len);
  while (out.size() < len) {
    const std::uint64_t pos = offset + out.size();
    const Bytes page = disk_->read_now(metadata_base_ + pos / bs);
    const std::size_t from = pos % bs;
    const std::size_t n = std::min(len - out.size(), bs - from);
    out.insert(out.end(), page.begin() + from, page.begin() + from + n);
  }
  return out;
}

void IntegrityStore::write_meta(std::uint64_t offset, const Bytes& bytes) {
  const std::size_t bs = disk_->block_size();
  std::size_t done = 0;
  while (done < bytes.size()) {
    const std::uint64_t pos = offset + done;
    const BlockId block = metadata_base_ + pos / bs;
    Bytes page = disk_->read_now(block);
    const std::size_t from = pos % bs;
    const std::size_t n = std::min(bytes.size() - done, bs - from);
    std::copy(bytes.begin() + done, bytes.begin() + done + n, page.begin() + from);
    disk_->write_durable(block, page);
    done += n;
  }
}

IntegrityStore::Entry IntegrityStore::hash_group(const Bytes& bytes) const { return cipher_.node_hash(bytes); }

Bytes IntegrityStore::raw_group(std::size_t k, std::uint64_t g) const {
  constexpr std::size_t span = MerkleGeometry::kArity * MerkleGeometry::kEntry;
  if (on_disk(k)) return read_meta(geometry_.layer_offset(k) + g * span, span);
  Bytes out(span, 0);
  const auto& layer = memory_[k];
  for (std::size_t j = 0; j < MerkleGeometry::kArity; ++j) {
    const std::uint64_t i = g * MerkleGeometry::kArity + j;
    if (i >= layer.size()) break;
    std::copy(layer[i].begin(), layer[i].end(), out.begin() + j * MerkleGeometry::kEntry);
  }
  return out;
}

Bytes IntegrityStore::group(std::size_t k, std::uint64_t g) const {
  Bytes bytes = raw_group(k, g);
  if (on_disk(k) && !skip_verification_) {
    if (hash_group(bytes) != entry(k + 1, g)) {
      throw IntegrityFault("metadata layer " + std::to_string(k) + " group " + std::to_string(g) +
                           " fails verification");
    }
  }
  return bytes;
}

void IntegrityStore::write_group(std::size_t k, std::uint64_t g, const Bytes& bytes) {
  constexpr std::size_t span = MerkleGeometry::kArity * MerkleGeometry::kEntry;
  write_meta(geometry_.layer_offset(k) + g * span, bytes);
}

IntegrityStore::Entry IntegrityStore::entry(std::size_t k, std::uint64_t i) const {
  if (!on_disk(k)) return memory_[k][i];
  const Bytes g = group(k, i / MerkleGeometry::kArity);
  Entry e;
  const std::size_t at = (i % MerkleGeometry::kArity) * MerkleGeometry::kEntry;
  std::copy(g.begin() + at, g.begin() + at + MerkleGeometry::kEntry, e.begin());
  return e;
}

void IntegrityStore::set_entry(std::size_t k, std::uint64_t i, const Entry& e) {
  const std::uint64_t g = i / MerkleGeometry::kArity;
  Bytes bytes;
  if (on_disk(k)) {
    bytes = group(k, g);
    std::copy(e.begin(), e.end(), bytes.begin() + (i % MerkleGeometry::kArity) * MerkleGeometry::kEntry);
    write_group(k, g, bytes);
  } else {
    memory_[k][i] = e;
    if (k + 1 == geometry_.layers()) return;
    bytes = raw_group(k, g);
  }
  set_entry(k + 1, g, hash_group(bytes));
}

void IntegrityStore::rebuild(const std::vector<Entry>& leaf_entries) {
  std::vector<Entry> level = leaf_entries;
  for (std::size_t k = 0; k < geometry_.layers(); ++k) {
    if (on_disk(k)) {
      Bytes all(((level.size() + MerkleGeometry::kArity - 1) / MerkleGeometry::kArity) *
                    MerkleGeometry::kArity * MerkleGeometry::kEntry,
                0);
      for (std::size_t i = 0; i < level.size(); ++i) {
        std::copy(level[i].begin(), level[i].end(), all.begin() + i * MerkleGeometry::kEntry);
      }
      write_meta(geometry_.layer_offset(k), all);
      memory_[k].clear();
    } else {
      memory_[k] = level;
    }
    if (k + 1 == geometry_.layers()) break;
    std::vector<Entry> parent(geometry_.layer_size(k + 1));
    for (std::uint64_t g = 0; g < parent.size(); ++g) {
      Bytes bytes(MerkleGeometry::kArity * MerkleGeometry::kEntry, 0);
      for (std::size_t j = 0; j < MerkleGeometry::kArity; ++j) {
        const std::uint64_t i = g * MerkleGeometry::kArity + j;
        if (i >= level.size()) break;
        std::copy(level[i].begin(), level[i].end(), bytes.begin() + j * MerkleGeometry::kEntry);
      }
      parent[g] = hash_group(bytes);
    }
    level = std::move(parent);
  }
}

void IntegrityStore::put(BlockId block, const Leaf& leaf) {
  if (block >= leaves()) throw OutOfRange("leaf " + std::to_string(block) + " out of range");
  std::lock_guard lock(mu_);
  Entry e;
  leaf.serialize(e.data());
  set_entry(0, block, e);
}

Leaf IntegrityStore::get(BlockId block) const {
  if (block >= leaves()) throw OutOfRange("leaf " + std::to_string(block) + " out of range");
  std::lock_guard lock(mu_);
  return Leaf::parse(entry(0, block).data());
}

std::vector<Leaf> IntegrityStore::all() const {
  std::lock_guard lock(mu_);
  std::vector<Leaf> out;
  out.reserve(leaves());
  for (std::uint64_t g = 0; g * MerkleGeometry::kArity < leaves(); ++g) {
    const Bytes bytes = on_disk(0) ? group(0, g) : raw_group(0, g);
    for (std::size_t j = 0; j < MerkleGeometry::kArity && out.size() < leaves(); ++j) {
      out.push_back(Leaf::parse(bytes.data() + j * MerkleGeometry::kEntry));
    }
  }
  return out;
}

void IntegrityStore::load(const std::vector<Leaf>& leaves_in) {
  if (leaves_in.size() != leaves()) throw std::invalid_argument("leaf count mismatch");
  std::lock_guard lock(mu_);
  std::vector<Entry> entries(leaves_in.size());
  for (std::size_t i = 0; i < leaves_in.size(); ++i) leaves_in[i].serialize(entries[i].data());
  rebuild(entries);
}

Digest IntegrityStore::root() const {
  std::lock_guard lock(mu_);
  return memory_.back().front();
}

}  // namespace rrbd::storage
