#include "rrbd/net/wire.hpp"

namespace rrbd::net {

std::string to_string(MsgType t) {
  switch (t) {
    case MsgType::kWriteRepl: return "WriteRepl";
    case MsgType::kAck: return "Ack";
    case MsgType::kMatchA: return "MatchA";
    case MsgType::kMatchB: return "MatchB";
    case MsgType::kP1a: return "P1a";
    case MsgType::kP1b: return "P1b";
    case MsgType::kReconfig: return "Reconfig";
    case MsgType::kHashReq: return "HashReq";
    case MsgType::kHashResp: return "HashResp";
    case MsgType::kPageReq: return "PageReq";
    case MsgType::kPageResp: return "PageResp";
  }
  return "?";
}

bool is_data(MsgType t) { return t == MsgType::kWriteRepl || t == MsgType::kAck; }

Bytes encode(const Message& m, const storage::CipherContext& cipher) {
  Bytes out;
  out.reserve(kHeaderSize + m.payload.size() + kMacSize);
  out.push_back(static_cast<std::uint8_t>(m.type));
  put_le(out, m.ballot);
  put_le(out, m.write_index);
  put_le(out, m.block);
  out.push_back(m.flags);
  put_le(out, static_cast<std::uint32_t>(m.payload.size()));
  out.insert(out.end(), m.payload.begin(), m.payload.end());
  const auto mac = cipher.mac(out);
  out.insert(out.end(), mac.begin(), mac.end());
  return out;
}

std::optional<Message> decode(ByteView frame, const storage::CipherContext& cipher) {
  if (frame.size() < kHeaderSize + kMacSize) return std::nullopt;
  const ByteView body = frame.first(frame.size() - kMacSize);
  if (!cipher.verify_mac(body, frame.last(kMacSize))) return std::nullopt;
  Reader r(body);
  Message m;
  const auto type = r.le<std::uint8_t>();
  if (type < 1 || type > 11) return std::nullopt;
  m.type = static_cast<MsgType>(type);
  m.ballot = r.le<std::uint64_t>();
  m.write_index = r.le<std::uint64_t>();
  m.block = r.le<std::uint64_t>();
  m.flags = r.le<std::uint8_t>();
  const auto len = r.le<std::uint32_t>();
  if (len != r.remaining()) return std::nullopt;
  const ByteView p = r.take(len);
  m.payload.assign(p.begin(), p.end());
  return m;
}

}  // namespace rrbd::net
