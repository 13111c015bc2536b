#include "rrbd/net/configuration.hpp"

#include <set>

namespace rrbd::net {

std::string NodeId::to_string() const {
  return "s" + std::to_string(slot) + "." + std::to_string(incarnation);
}

bool Configuration::contains(const NodeId& id) const {
  for (const auto& m : members) {
    if (m == id) return true;
  }
  return false;
}

void Configuration::validate() const {
  const std::size_t n = members.size();
  if (n < f + 1 || n > 2 * static_cast<std::size_t>(f) + 1) {
    throw InvalidConfiguration("need f+1 <= N <= 2f+1, got N=" + std::to_string(n) +
                               " f=" + std::to_string(f));
  }
  std::set<std::uint32_t> slots;
  for (const auto& m : members) {
    if (!slots.insert(m.slot).second) throw InvalidConfiguration("duplicate slot in configuration");
  }
}

Bytes Configuration::serialize() const {
  Bytes out;
  put_le(out, ballot);
  put_le(out, f);
  put_le(out, static_cast<std::uint32_t>(members.size()));
  for (const auto& m : members) {
    put_le(out, m.slot);
    put_le(out, m.incarnation);
  }
  return out;
}

Configuration Configuration::parse(Reader& r) {
  Configuration c;
  c.ballot = r.le<std::uint64_t>();
  c.f = r.le<std::uint32_t>();
  const auto n = r.le<std::uint32_t>();
  if (n > 1024) throw std::out_of_range("configuration too large");
  for (std::uint32_t i = 0; i < n; ++i) {
    NodeId id;
    id.slot = r.le<std::uint32_t>();
    id.incarnation = r.le<std::uint32_t>();
    c.members.push_back(id);
  }
  return c;
}

Configuration Configuration::parse(ByteView data) {
  Reader r(data);
  return parse(r);
}

}  // namespace rrbd::net
