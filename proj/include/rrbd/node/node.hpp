#pragma once

// One replica. Slot 0 is the primary position, every other slot a backup; a
// restarted machine is a new Node with a fresh incarnation over the same disk.
//
// Nodes are driven by the simulator's event loop: each entry point and each
// delivery runs to completion before the next event, which is what makes the
// index assignment and gate check a single critical section.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrbd/net/config_service.hpp"
#include "rrbd/net/configuration.hpp"
#include "rrbd/net/network.hpp"
#include "rrbd/node/conflict_gate.hpp"
#include "rrbd/sim/simulator.hpp"
#include "rrbd/storage/cipher.hpp"
#include "rrbd/storage/integrity_store.hpp"
#include "rrbd/storage/virtual_disk.hpp"

namespace rrbd::node {

using model::BlockId;
using model::SyncFlags;
using net::NodeId;

class NotActive : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Deliberately broken variants used to show the test campaigns have teeth.
struct Mutants {
  bool ack_off_by_one = false;       // release sync writes one index early
  bool skip_merkle_verify = false;   // trust on-disk Merkle layers
  bool backup_out_of_order = false;  // admit replicated writes on arrival
};

struct NodeParams {
  std::uint64_t app_blocks = 64;
  std::uint32_t merkle_disk_layers = 0;
  Mutants mutants;
  sim::Time recovery_timeout = 200 * sim::kMillisecond;
  std::size_t page_window = 64;
  std::size_t reorder_bound = std::size_t{1} << 16;
};

struct Env {
  sim::Simulator& sim;
  net::Network& net;
  const storage::CipherContext& cipher;
};

enum class Inactive { kCrashed, kHalted, kFenced };

struct RecoveryReport {
  bool ok = false;
  bool fresh = false;  // initialization, no prior configuration
  std::string error;   // insufficient-quorum, rejected, superseded
  sim::Time started = 0;
  sim::Time matched = 0;
  sim::Time hashes_received = 0;
  sim::Time repaired = 0;
  sim::Time finished = 0;
  std::uint64_t hash_bytes = 0;
  std::uint64_t pages_verified = 0;
  std::uint64_t pages_repaired = 0;
  std::vector<BlockId> repaired_blocks;
  std::uint64_t reselections = 0;
  NodeId designated;
  std::uint64_t designated_ballot = 0;
  std::uint64_t designated_index = 0;
  std::uint64_t prior_ballot = 0;  // highest configuration before this one
  std::vector<net::Configuration> prior;
};

struct Observer {
  std::function<void(Inactive)> on_inactive;
  std::function<void()> on_active;
  // Every WriteRepl/Ack reaching fence_check, with the verdict.
  std::function<void(const NodeId& from, const net::Message& msg, bool accepted)> on_data;
  // Backup admitted index into its gate.
  std::function<void(std::uint64_t index)> on_admit;
  // Recovering node finished its own repair (before Reconfig goes out).
  std::function<void(const RecoveryReport&)> on_repaired;
};

struct NodeCounters {
  std::uint64_t data_accepted = 0;
  std::uint64_t data_rejected = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t held_overflow = 0;
  std::uint64_t acks_sent = 0;
  std::uint64_t writes = 0;
  std::uint64_t reads = 0;
};

class Node {
 public:
  Node(Env env, NodeId id, storage::VirtualDisk& disk, NodeParams params);
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  // Commits conf through MatchA; succeeds only on an untouched service.
  void initialize(const net::Configuration& conf, std::function<void(bool)> done);
  // Joins conf (conf.ballot fresh, this node a member) via the full protocol.
  void recover(const net::Configuration& conf, std::function<void(const RecoveryReport&)> done);
  // Machine failure: memory lost, volatile disk cache lost, messages lost.
  void crash();
  // Integrity failure: behaves like a crash, with a reason.
  void halt(const std::string& why);

  // Primary entry points; throw NotActive. write() returns the write index.
  std::uint64_t write(BlockId block, ByteView plaintext, SyncFlags sync, std::function<void()> done);
  void read(BlockId block, std::function<void(Bytes)> done);

  const NodeId& id() const { return id_; }
  bool is_primary_slot() const { return id_.slot == 0; }
  bool alive() const { return alive_; }
  bool halted() const { return halted_; }
  const std::string& halt_reason() const { return halt_reason_; }
  bool active() const { return alive_ && ballot_ == seen_ballot_ && ballot_ > 0; }
  std::uint64_t ballot() const { return ballot_; }
  std::uint64_t seen_ballot() const { return seen_ballot_; }
  std::uint64_t write_index() const { return write_index_; }
  const net::Configuration& conf() const { return conf_; }
  const storage::IntegrityStore& integrity() const { return *integrity_; }
  storage::VirtualDisk& disk() { return disk_; }
  const ConflictGate& gate() const { return gate_; }
  std::uint64_t ack_watermark(const NodeId& backup) const;
  std::size_t held() const { return held_.size(); }
  std::size_t sync_waiters() const { return waiters_.size(); }
  bool drained() const { return gate_.idle() && disk_.in_flight() == 0; }
  const NodeCounters& counters() const { return counters_; }
  Observer& observer() { return observer_; }

  static bool fence_accepts(net::MsgType type, std::uint64_t msg_ballot, std::uint64_t seen,
                            std::uint64_t ballot);

 private:
  struct SyncWaiter {
    std::function<void()> done;
    bool disk_done = false;
  };

  struct Repair {
    NodeId source;
    std::vector<storage::Leaf> leaves;
    bool have_leaves = false;
    std::vector<BlockId> to_fetch;
    std::size_t next_fetch = 0;
    std::set<BlockId> outstanding;
    std::uint64_t token = 0;
    std::function<void()> on_done;
    std::function<void(const std::string&)> on_fail;
  };

  struct Recovery {
    enum class Phase { kMatch, kP1, kRepair, kReconfig, kDone } phase = Phase::kMatch;
    net::Configuration conf;
    std::function<void(const RecoveryReport&)> done;
    std::function<void(bool)> init_done;  // set for initialize()
    RecoveryReport report;
    std::map<std::uint64_t, net::Configuration> prior;
    std::map<NodeId, std::pair<std::uint64_t, std::uint64_t>> p1b;  // (ballot, writeIndex)
    std::set<NodeId> excluded;
    std::vector<NodeId> reconfig_order;
    std::size_t reconfig_pos = 0;
    std::uint64_t token = 0;
  };

  // node.cpp
  void on_message(const NodeId& from, const net::Message& msg);
  void send(const NodeId& to, net::Message msg);
  void go_inactive(Inactive why);
  void raise_seen(std::uint64_t ballot);
  void activate(const net::Configuration& conf, std::uint64_t write_index);
  void when_drained(std::function<void()> cb);
  void check_drained();
  bool verify_page(BlockId block, const storage::Leaf& leaf, ByteView page) const;

  // primary.cpp
  void on_ack(const NodeId& from, const net::Message& msg);
  std::uint64_t quorum_index() const;
  void release_sync();
  void gate_done(ConflictGate::OpId op);

  // backup.cpp
  void on_write_repl(const NodeId& from, const net::Message& msg);
  void admit(const net::Message& msg);

  // recovery.cpp
  void start_match(const net::Configuration& conf);
  void on_match_b(const net::Message& msg);
  void on_p1a(const NodeId& from, const net::Message& msg);
  void on_p1b(const NodeId& from, const net::Message& msg);
  void try_quorum();
  void choose_designated();
  void on_hash_req(const NodeId& from, const net::Message& msg);
  void on_page_req(const NodeId& from, const net::Message& msg);
  void on_hash_resp(const NodeId& from, const net::Message& msg);
  void on_page_resp(const NodeId& from, const net::Message& msg);
  void on_reconfig(const NodeId& from, const net::Message& msg);
  void on_reconfig_done(const NodeId& from, const net::Message& msg);
  void start_repair(const NodeId& source, std::function<void()> on_done,
                    std::function<void(const std::string&)> on_fail);
  void pump_repair();
  void arm_repair_timer();
  void next_reconfig();
  void arm_recovery_timer(const std::string& error);
  void finish_recovery(bool ok, const std::string& error);

  Env env_;
  NodeId id_;
  storage::VirtualDisk& disk_;
  NodeParams params_;
  std::unique_ptr<storage::IntegrityStore> integrity_;
  ConflictGate gate_;

  bool alive_ = true;
  bool halted_ = false;
  std::string halt_reason_;
  std::uint64_t ballot_ = 0;
  std::uint64_t seen_ballot_ = 0;
  std::uint64_t write_index_ = 0;
  net::Configuration conf_;

  // primary
  std::map<NodeId, std::uint64_t> watermarks_;
  std::map<std::uint64_t, SyncWaiter> waiters_;
  std::map<ConflictGate::OpId, std::function<void()>> gate_callbacks_;

  // backup
  std::map<std::uint64_t, net::Message> held_;

  std::vector<std::function<void()>> drain_waiters_;
  std::optional<Repair> repair_;
  std::optional<Recovery> recovery_;
  std::uint64_t next_token_ = 1;

  NodeCounters counters_;
  Observer observer_;
};

}  // namespace rrbd::node
