#pragma once

// Trusted registry of configurations. Never under adversary control; only the
// links to it are.

#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>

#include "rrbd/net/configuration.hpp"
#include "rrbd/net/network.hpp"

namespace rrbd::net {

class ConfigRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MatchB {
  std::uint64_t ballot_c = 0;
  std::map<std::uint64_t, Configuration> all_conf;

  Bytes serialize() const;
  static MatchB parse(ByteView data);
};

class ConfigService {
 public:
  ConfigService() = default;

  // Appends conf (idempotent for an identical replay). Throws ConfigRejected
  // when conf.ballot != seen_ballot or the ballot is taken by other members.
  MatchB match_a(std::uint64_t seen_ballot, const Configuration& conf);

  std::uint64_t highest_ballot() const;
  std::map<std::uint64_t, Configuration> all_conf() const;

  // Serve MatchA frames at kServiceId.
  void serve(Network& net);

 private:
  mutable std::mutex mu_;
  std::map<std::uint64_t, Configuration> all_conf_;
  std::uint64_t highest_ = 0;
};

}  // namespace rrbd::net
