#pragma once

// A deployment: simulator, network, configuration service, one disk per slot
// and every node incarnation that ever ran on it.

#include <cstdint>
#include <memory>
#include <vector>

#include "rrbd/net/config_service.hpp"
#include "rrbd/net/network.hpp"
#include "rrbd/node/node.hpp"
#include "rrbd/sim/simulator.hpp"
#include "rrbd/storage/cipher.hpp"
#include "rrbd/storage/virtual_disk.hpp"

namespace rrbd::harness {

struct ClusterParams {
  std::uint32_t nodes = 2;
  std::uint32_t f = 1;
  std::uint64_t blocks = 64;
  std::size_t block_size = 4096;
  std::uint32_t merkle_disk_layers = 0;
  node::Mutants mutants;
  net::NetLatency net_latency;
  storage::LatencyModel disk_latency;
  sim::Time recovery_timeout = 200 * sim::kMillisecond;
  std::uint64_t seed = 1;
};

class Cluster {
 public:
  explicit Cluster(const ClusterParams& p);

  // Initializes every node with ballot 1. Returns false if any node fails.
  bool deploy();

  sim::Simulator& sim() { return sim_; }
  net::Network& net() { return net_; }
  net::ConfigService& service() { return service_; }
  const storage::CipherContext& cipher() const { return cipher_; }
  const ClusterParams& params() const { return p_; }

  std::uint32_t slots() const { return static_cast<std::uint32_t>(current_.size()); }
  node::Node& node(std::uint32_t slot) { return *current_.at(slot); }
  node::Node& primary() { return node(0); }
  storage::VirtualDisk& disk(std::uint32_t slot) { return *disks_.at(slot); }
  std::uint64_t disk_blocks() const;

  // Fresh incarnation on the slot's disk (the old one must be dead).
  node::Node& restart(std::uint32_t slot);
  // New machine for the slot on a blank disk; the old incarnation keeps running
  // on the old disk (split-brain staging).
  node::Node& replace(std::uint32_t slot);
  // Configuration for a recovery: every live node of the latest configuration
  // plus the restarted slot, at ballot highest+1.
  net::Configuration next_configuration(std::uint32_t recovering_slot) const;

 private:
  node::Node& spawn(std::uint32_t slot, std::uint32_t incarnation);

  ClusterParams p_;
  sim::Simulator sim_;
  storage::CipherContext cipher_;
  net::Network net_;
  net::ConfigService service_;
  std::vector<std::unique_ptr<storage::VirtualDisk>> disks_;
  std::vector<std::unique_ptr<storage::VirtualDisk>> retired_disks_;
  std::vector<std::unique_ptr<node::Node>> incarnations_;
  std::vector<node::Node*> current_;
};

}  // namespace rrbd::harness
