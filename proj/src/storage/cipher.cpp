#include "rrbd/storage/cipher.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <memory>
#include <string_view>

namespace rrbd::storage {

bool Leaf::empty() const {
  return write_index == 0 && epoch == 0 &&
         std::all_of(tag.begin(), tag.end(), [](std::uint8_t b) { return b == 0; });
}

void Leaf::serialize(std::uint8_t* out) const {
  std::memcpy(out, tag.data(), 16);
  for (int i = 0; i < 8; ++i) out[16 + i] = static_cast<std::uint8_t>(write_index >> (8 * i));
  for (int i = 0; i < 8; ++i) out[24 + i] = static_cast<std::uint8_t>(epoch >> (8 * i));
}

Bytes Leaf::bytes() const {
  Bytes b(kSize);
  serialize(b.data());
  return b;
}

Leaf Leaf::parse(const std::uint8_t* in) {
  Leaf l;
  std::memcpy(l.tag.data(), in, 16);
  for (int i = 0; i < 8; ++i) l.write_index |= static_cast<std::uint64_t>(in[16 + i]) << (8 * i);
  for (int i = 0; i < 8; ++i) l.epoch |= static_cast<std::uint64_t>(in[24 + i]) << (8 * i);
  return l;
}

Digest hmac_sha256(ByteView key, ByteView data) {
  Digest out{};
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
            out.data(), &len)) {
    throw CryptoError("HMAC failed");
  }
  return out;
}

namespace {

Key derive(const Key& master, std::string_view label) {
  return hmac_sha256(master, ByteView(reinterpret_cast<const std::uint8_t*>(label.data()), label.size()));
}

struct CtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using Ctx = std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter>;

std::array<std::uint8_t, 12> nonce(std::uint64_t block, std::uint64_t write_index) {
  std::array<std::uint8_t, 12> n{};
  for (int i = 0; i < 8; ++i) n[i] = static_cast<std::uint8_t>(write_index >> (8 * i));
  for (int i = 0; i < 4; ++i) n[8 + i] = static_cast<std::uint8_t>(block >> (8 * i));
  return n;
}

Bytes aad(std::uint64_t block, std::uint64_t write_index, std::uint64_t epoch) {
  Bytes a;
  put_le(a, block);
  put_le(a, write_index);
  put_le(a, epoch);
  return a;
}

}  // namespace

CipherContext::CipherContext(const Key& master)
    : aead_master_(derive(master, "aead")),
      mac_key_(derive(master, "mac")),
      hash_key_(derive(master, "merkle")) {}

Key CipherContext::key_from_seed(std::uint64_t seed) {
  Bytes s;
  put_le(s, seed);
  const std::string_view label = "deployment-master";
  return hmac_sha256(ByteView(reinterpret_cast<const std::uint8_t*>(label.data()), label.size()), s);
}

Key CipherContext::epoch_key(std::uint64_t epoch) const {
  std::lock_guard lock(mu_);
  auto it = epoch_keys_.find(epoch);
  if (it != epoch_keys_.end()) return it->second;
  Bytes info{'a', 'e', 'a', 'd', '-', 'e', 'p', 'o', 'c', 'h'};
  put_le(info, epoch);
  Key k = hmac_sha256(aead_master_, info);
  epoch_keys_.emplace(epoch, k);
  return k;
}

Bytes CipherContext::seal(std::uint64_t epoch, std::uint64_t block, std::uint64_t write_index,
                          ByteView plaintext, Leaf& leaf) const {
  const Key key = epoch_key(epoch);
  const auto iv = nonce(block, write_index);
  const Bytes ad = aad(block, write_index, epoch);
  Ctx ctx(EVP_CIPHER_CTX_new());
  Bytes out(plaintext.size());
  int len = 0;
  if (!ctx || EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, 12, nullptr) != 1 ||
      EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), iv.data()) != 1 ||
      EVP_EncryptUpdate(ctx.get(), nullptr, &len, ad.data(), static_cast<int>(ad.size())) != 1 ||
      EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                        static_cast<int>(plaintext.size())) != 1 ||
      EVP_EncryptFinal_ex(ctx.get(), out.data() + len, &len) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, 16, leaf.tag.data()) != 1) {
    throw CryptoError("AES-GCM seal failed");
  }
  leaf.write_index = write_index;
  leaf.epoch = epoch;
  return out;
}

std::optional<Bytes> CipherContext::open(std::uint64_t block, const Leaf& leaf,
                                         ByteView ciphertext) const {
  if (leaf.empty()) {
    if (std::all_of(ciphertext.begin(), ciphertext.end(), [](std::uint8_t b) { return b == 0; })) {
      return Bytes(ciphertext.size(), 0);
    }
    return std::nullopt;
  }
  const Key key = epoch_key(leaf.epoch);
  const auto iv = nonce(block, leaf.write_index);
  const Bytes ad = aad(block, leaf.write_index, leaf.epoch);
  Ctx ctx(EVP_CIPHER_CTX_new());
  Bytes out(ciphertext.size());
  auto tag = leaf.tag;
  int len = 0;
  if (!ctx || EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, 12, nullptr) != 1 ||
      EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), iv.data()) != 1 ||
      EVP_DecryptUpdate(ctx.get(), nullptr, &len, ad.data(), static_cast<int>(ad.size())) != 1 ||
      EVP_DecryptUpdate(ctx.get(), out.data(), &len, ciphertext.data(),
                        static_cast<int>(ciphertext.size())) != 1 ||
      EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, 16, tag.data()) != 1) {
    throw CryptoError("AES-GCM setup failed");
  }
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &len) != 1) return std::nullopt;
  return out;
}

Digest CipherContext::mac(ByteView data) const { return hmac_sha256(mac_key_, data); }

bool CipherContext::verify_mac(ByteView data, ByteView mac_bytes) const {
  if (mac_bytes.size() != 32) return false;
  const Digest d = mac(data);
  return CRYPTO_memcmp(d.data(), mac_bytes.data(), 32) == 0;
}

Digest CipherContext::node_hash(ByteView children) const { return hmac_sha256(hash_key_, children); }

}  // namespace rrbd::storage
