#pragma once

// Frame: type u8 | ballot u64 | write_index u64 | block u64 | flags u8 |
// payload_len u32 | payload | HMAC-SHA256 over everything before it.

#include <cstdint>
#include <optional>
#include <string>

#include "rrbd/bytes.hpp"
#include "rrbd/storage/cipher.hpp"

namespace rrbd::net {

enum class MsgType : std::uint8_t {
  kWriteRepl = 1,
  kAck = 2,
  kMatchA = 3,
  kMatchB = 4,
  kP1a = 5,
  kP1b = 6,
  kReconfig = 7,
  kHashReq = 8,
  kHashResp = 9,
  kPageReq = 10,
  kPageResp = 11,
};

inline constexpr std::uint8_t kFlagFua = 1;
inline constexpr std::uint8_t kFlagPreflush = 2;
// Reconfig carrying this bit is the member's "repair finished" reply.
inline constexpr std::uint8_t kFlagReply = 0x80;
// MatchB carrying this bit reports a rejected MatchA.
inline constexpr std::uint8_t kFlagRejected = 0x40;

struct Message {
  MsgType type = MsgType::kAck;
  std::uint64_t ballot = 0;
  std::uint64_t write_index = 0;
  std::uint64_t block = 0;
  std::uint8_t flags = 0;
  Bytes payload;

  bool operator==(const Message&) const = default;
};

inline constexpr std::size_t kHeaderSize = 1 + 8 + 8 + 8 + 1 + 4;
inline constexpr std::size_t kMacSize = 32;

std::string to_string(MsgType t);
bool is_data(MsgType t);

Bytes encode(const Message& m, const storage::CipherContext& cipher);
// nullopt on a bad MAC, unknown type or inconsistent length.
std::optional<Message> decode(ByteView frame, const storage::CipherContext& cipher);

}  // namespace rrbd::net
