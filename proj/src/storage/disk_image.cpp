#include "rrbd/storage/disk_image.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace rrbd::storage {

Bytes DiskImage::page(std::uint64_t block) const {
  auto it = pages.find(block);
  return it == pages.end() ? Bytes(block_size, 0) : it->second;
}

Bytes DiskImage::serialize() const {
  Bytes out{'R', 'S', 'H', 'D'};
  put_le(out, kVersion);
  put_le(out, block_size);
  put_le(out, num_blocks);
  put_le(out, merkle_disk_layers);
  out.reserve(out.size() + num_blocks * block_size);
  for (std::uint64_t b = 0; b < num_blocks; ++b) {
    auto it = pages.find(b);
    if (it == pages.end()) {
      out.insert(out.end(), block_size, 0);
    } else {
      out.insert(out.end(), it->second.begin(), it->second.end());
    }
  }
  return out;
}

DiskImage DiskImage::deserialize(ByteView data) {
  Reader r(data);
  auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), "RSHD")) throw std::runtime_error("bad disk image magic");
  if (r.le<std::uint32_t>() != kVersion) throw std::runtime_error("unsupported disk image version");
  DiskImage img;
  img.block_size = r.le<std::uint32_t>();
  img.num_blocks = r.le<std::uint64_t>();
  img.merkle_disk_layers = r.le<std::uint32_t>();
  if (img.block_size == 0 || r.remaining() != img.num_blocks * img.block_size) {
    throw std::runtime_error("disk image size mismatch");
  }
  for (std::uint64_t b = 0; b < img.num_blocks; ++b) {
    auto p = r.take(img.block_size);
    if (std::any_of(p.begin(), p.end(), [](std::uint8_t x) { return x != 0; })) {
      img.pages.emplace(b, Bytes(p.begin(), p.end()));
    }
  }
  return img;
}

void DiskImage::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  const Bytes b = serialize();
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw std::runtime_error("cannot write " + path);
}

DiskImage DiskImage::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  Bytes b((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(b);
}

}  // namespace rrbd::storage
