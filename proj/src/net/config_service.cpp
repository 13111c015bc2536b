#include "rrbd/net/config_service.hpp"

namespace rrbd::net {

Bytes MatchB::serialize() const {
  Bytes out;
  put_le(out, ballot_c);
  put_le(out, static_cast<std::uint32_t>(all_conf.size()));
  for (const auto& [b, c] : all_conf) {
    const Bytes one = c.serialize();
    out.insert(out.end(), one.begin(), one.end());
  }
  return out;
}

MatchB MatchB::parse(ByteView data) {
  Reader r(data);
  MatchB m;
  m.ballot_c = r.le<std::uint64_t>();
  const auto n = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < n; ++i) {
    Configuration c = Configuration::parse(r);
    m.all_conf.emplace(c.ballot, std::move(c));
  }
  return m;
}

MatchB ConfigService::match_a(std::uint64_t seen_ballot, const Configuration& conf) {
  if (conf.ballot != seen_ballot) throw ConfigRejected("configuration ballot differs from seen ballot");
  conf.validate();
  std::lock_guard lock(mu_);
  auto it = all_conf_.find(conf.ballot);
  if (it != all_conf_.end() && !(it->second == conf)) {
    throw ConfigRejected("ballot " + std::to_string(conf.ballot) + " already holds another configuration");
  }
  all_conf_.emplace(conf.ballot, conf);
  highest_ = std::max(highest_, conf.ballot);
  return MatchB{highest_, all_conf_};
}

std::uint64_t ConfigService::highest_ballot() const {
  std::lock_guard lock(mu_);
  return highest_;
}

std::map<std::uint64_t, Configuration> ConfigService::all_conf() const {
  std::lock_guard lock(mu_);
  return all_conf_;
}

void ConfigService::serve(Network& net) {
  net.attach(kServiceId, [this, &net](const NodeId& from, const Message& msg) {
    if (msg.type != MsgType::kMatchA) return;
    Message reply;
    reply.type = MsgType::kMatchB;
    reply.ballot = msg.ballot;
    try {
      reply.payload = match_a(msg.ballot, Configuration::parse(msg.payload)).serialize();
    } catch (const std::exception&) {
      reply.flags = kFlagRejected;
    }
    net.send(kServiceId, from, reply);
  });
}

}  // namespace rrbd::net
