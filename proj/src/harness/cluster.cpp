#include "rrbd/harness/cluster.hpp"

namespace rrbd::harness {

Cluster::Cluster(const ClusterParams& p)
    : p_(p),
      sim_(p.seed),
      cipher_(storage::CipherContext::key_from_seed(p.seed)),
      net_(sim_, cipher_, p.net_latency, p.seed * 0x9e3779b97f4a7c15ull + 1) {
  service_.serve(net_);
  const std::uint64_t total = disk_blocks();
  for (std::uint32_t s = 0; s < p_.nodes; ++s) {
    disks_.push_back(std::make_unique<storage::VirtualDisk>(sim_, p_.block_size, total, p_.disk_latency,
                                                            p_.seed * 1000003 + s + 17));
    current_.push_back(nullptr);
    spawn(s, 0);
  }
}

std::uint64_t Cluster::disk_blocks() const {
  return p_.blocks + storage::MerkleGeometry(p_.blocks, p_.merkle_disk_layers).metadata_blocks(p_.block_size);
}

node::Node& Cluster::spawn(std::uint32_t slot, std::uint32_t incarnation) {
  node::NodeParams np;
  np.app_blocks = p_.blocks;
  np.merkle_disk_layers = p_.merkle_disk_layers;
  np.mutants = p_.mutants;
  np.recovery_timeout = p_.recovery_timeout;
  incarnations_.push_back(std::make_unique<node::Node>(node::Env{sim_, net_, cipher_},
                                                       net::NodeId{slot, incarnation}, *disks_[slot], np));
  current_[slot] = incarnations_.back().get();
  return *current_[slot];
}

bool Cluster::deploy() {
  net::Configuration conf;
  conf.ballot = 1;
  conf.f = p_.f;
  for (auto* n : current_) conf.members.push_back(n->id());
  conf.validate();
  std::uint32_t ok = 0;
  std::uint32_t answered = 0;
  for (auto* n : current_) {
    n->initialize(conf, [&](bool good) {
      ++answered;
      ok += good;
    });
  }
  sim_.run_while([&] { return answered < current_.size(); });
  return ok == current_.size();
}

node::Node& Cluster::restart(std::uint32_t slot) {
  node::Node& old = node(slot);
  if (old.alive()) old.crash();
  return spawn(slot, old.id().incarnation + 1);
}

node::Node& Cluster::replace(std::uint32_t slot) {
  const std::uint32_t inc = node(slot).id().incarnation + 1;
  retired_disks_.push_back(std::move(disks_[slot]));
  disks_[slot] = std::make_unique<storage::VirtualDisk>(sim_, p_.block_size, disk_blocks(), p_.disk_latency,
                                                        p_.seed * 1000003 + slot + 17 + 7919 * inc);
  return spawn(slot, inc);
}

net::Configuration Cluster::next_configuration(std::uint32_t recovering_slot) const {
  net::Configuration conf;
  conf.ballot = service_.highest_ballot() + 1;
  conf.f = p_.f;
  for (std::uint32_t s = 0; s < current_.size(); ++s) {
    if (s == recovering_slot || current_[s]->alive()) conf.members.push_back(current_[s]->id());
  }
  return conf;
}

}  // namespace rrbd::harness
