#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>

#include "rrbd/bytes.hpp"

namespace rrbd::storage {

using Key = std::array<std::uint8_t, 32>;
using Digest = std::array<std::uint8_t, 32>;

// A block's authentication record: the GCM tag of its current ciphertext plus
// what is needed to rebuild the nonce and key. All zero means "never written",
// in which case the page must be all zero bytes.
struct Leaf {
  std::array<std::uint8_t, 16> tag{};
  std::uint64_t write_index = 0;
  std::uint64_t epoch = 0;

  static constexpr std::size_t kSize = 32;

  bool empty() const;
  void serialize(std::uint8_t* out) const;
  Bytes bytes() const;
  static Leaf parse(const std::uint8_t* in);
  bool operator==(const Leaf&) const = default;
};

class CryptoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// AES-256-GCM page sealing and HMAC-SHA256 message/tree authentication.
//
// The AEAD key is rotated per epoch (the configuration ballot) so that a write
// index reused after recovery never repeats a nonce under the same key. The
// nonce is the 64-bit write index followed by the low 32 bits of the block id.
class CipherContext {
 public:
  explicit CipherContext(const Key& master);
  static Key key_from_seed(std::uint64_t seed);

  Bytes seal(std::uint64_t epoch, std::uint64_t block, std::uint64_t write_index,
             ByteView plaintext, Leaf& leaf) const;
  // nullopt on authentication failure.
  std::optional<Bytes> open(std::uint64_t block, const Leaf& leaf, ByteView ciphertext) const;

  Digest mac(ByteView data) const;
  bool verify_mac(ByteView data, ByteView mac) const;
  // Interior Merkle node entry over the concatenated child entries.
  Digest node_hash(ByteView children) const;

 private:
  Key epoch_key(std::uint64_t epoch) const;

  Key aead_master_;
  Key mac_key_;
  Key hash_key_;
  mutable std::mutex mu_;
  mutable std::map<std::uint64_t, Key> epoch_keys_;
};

Digest hmac_sha256(ByteView key, ByteView data);

}  // namespace rrbd::storage
