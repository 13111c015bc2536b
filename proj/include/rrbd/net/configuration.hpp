#pragma once

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrbd/bytes.hpp"

namespace rrbd::net {

// A node identity. Slot 0 is the primary position; every restart of a slot
// gets a fresh incarnation, so a crashed machine's identity is never reused.
struct NodeId {
  std::uint32_t slot = 0;
  std::uint32_t incarnation = 0;

  auto operator<=>(const NodeId&) const = default;
  std::string to_string() const;
};

class InvalidConfiguration : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Configuration {
  std::uint64_t ballot = 0;
  // members[0] is the primary.
  std::vector<NodeId> members;
  std::uint32_t f = 0;

  std::size_t n() const { return members.size(); }
  const NodeId& primary() const { return members.front(); }
  bool contains(const NodeId& id) const;
  // f+1 <= N <= 2f+1 and no duplicate slots.
  void validate() const;

  Bytes serialize() const;
  static Configuration parse(Reader& r);
  static Configuration parse(ByteView data);
  bool operator==(const Configuration&) const = default;
};

}  // namespace rrbd::net
