#include <algorithm>

#include "rrbd/node/node.hpp"

namespace rrbd::node {

using net::Configuration;
using net::Message;
using net::MsgType;

namespace {

Message make(MsgType type, std::uint64_t ballot) {
  Message m;
  m.type = type;
  m.ballot = ballot;
  return m;
}

}  // namespace

void Node::initialize(const Configuration& conf, std::function<void(bool)> done) {
  recovery_.emplace();
  recovery_->init_done = std::move(done);
  recovery_->report.started = env_.sim.now();
  start_match(conf);
}

void Node::recover(const Configuration& conf, std::function<void(const RecoveryReport&)> done) {
  recovery_.emplace();
  recovery_->done = std::move(done);
  recovery_->report.started = env_.sim.now();
  start_match(conf);
}

void Node::start_match(const Configuration& conf) {
  conf.validate();
  if (!conf.contains(id_)) throw std::invalid_argument("node is not a member of its configuration");
  recovery_->conf = conf;
  seen_ballot_ = std::max(seen_ballot_, conf.ballot);
  Message m = make(MsgType::kMatchA, conf.ballot);
  m.payload = conf.serialize();
  send(net::kServiceId, m);
  arm_recovery_timer("service-unreachable");
}

void Node::arm_recovery_timer(const std::string& error) {
  const std::uint64_t token = recovery_->token = next_token_++;
  env_.sim.schedule(params_.recovery_timeout, [this, token, error] {
    if (alive_ && recovery_ && recovery_->token == token) finish_recovery(false, error);
  });
}

void Node::finish_recovery(bool ok, const std::string& error) {
  Recovery r = std::move(*recovery_);
  recovery_.reset();
  repair_.reset();
  r.report.ok = ok;
  r.report.error = error;
  r.report.finished = env_.sim.now();
  if (r.init_done) r.init_done(ok);
  if (r.done) r.done(r.report);
}

void Node::on_match_b(const Message& msg) {
  if (!recovery_ || recovery_->phase != Recovery::Phase::kMatch) return;
  if (msg.flags & net::kFlagRejected) {
    finish_recovery(false, "rejected");
    return;
  }
  net::MatchB mb;
  try {
    mb = net::MatchB::parse(msg.payload);
  } catch (const std::exception&) {
    return;
  }
  Recovery& r = *recovery_;
  r.report.matched = env_.sim.now();
  const std::uint64_t mine = r.conf.ballot;

  if (r.init_done) {
    const bool ok = mb.ballot_c == mine && mb.all_conf.size() == 1 && mb.all_conf.begin()->second == r.conf;
    if (ok) activate(r.conf, 0);
    finish_recovery(ok, ok ? "" : "check-failed");
    return;
  }
  if (mb.ballot_c > mine) {
    finish_recovery(false, "superseded");
    return;
  }
  for (const auto& [b, c] : mb.all_conf) {
    if (b < mine) r.prior.emplace(b, c);
  }
  if (r.prior.empty()) {
    r.report.fresh = true;
    activate(r.conf, 0);
    finish_recovery(true, "");
    return;
  }
  r.report.prior_ballot = r.prior.rbegin()->first;
  for (const auto& [b, c] : r.prior) r.report.prior.push_back(c);
  r.phase = Recovery::Phase::kP1;
  std::set<NodeId> targets;
  for (const auto& [b, c] : r.prior) targets.insert(c.members.begin(), c.members.end());
  targets.erase(id_);
  for (const auto& t : targets) send(t, make(MsgType::kP1a, mine));
  arm_recovery_timer("insufficient-quorum");
}

void Node::on_p1a(const NodeId& from, const Message& msg) {
  if (recovery_ && msg.ballot > recovery_->conf.ballot) finish_recovery(false, "superseded");
  raise_seen(msg.ballot);
  Message reply = make(MsgType::kP1b, seen_ballot_);
  reply.write_index = write_index_;
  put_le(reply.payload, ballot_);
  send(from, reply);
}

void Node::on_p1b(const NodeId& from, const Message& msg) {
  if (!recovery_ || recovery_->phase == Recovery::Phase::kMatch) return;
  if (msg.payload.size() != 8) return;
  Reader rd(msg.payload);
  recovery_->p1b[from] = {rd.le<std::uint64_t>(), msg.write_index};
  if (recovery_->phase == Recovery::Phase::kP1) try_quorum();
}

void Node::try_quorum() {
  Recovery& r = *recovery_;
  std::uint64_t top = 0;
  for (const auto& [id, bw] : r.p1b) top = std::max(top, bw.first);
  // Configurations older than the newest ballot anyone reports were already
  // fenced by the recovery that activated it.
  for (const auto& [b, c] : r.prior) {
    if (b < top) continue;
    const bool heard = std::any_of(c.members.begin(), c.members.end(),
                                   [&](const NodeId& m) { return r.p1b.count(m) > 0; });
    if (!heard) return;
  }
  const Configuration& latest = r.prior.rbegin()->second;
  std::size_t replies = 0;
  for (const auto& m : latest.members) replies += r.p1b.count(m);
  if (replies < latest.n() - latest.f) return;
  r.phase = Recovery::Phase::kRepair;
  r.token = next_token_++;  // disarm the quorum timer
  choose_designated();
}

void Node::choose_designated() {
  Recovery& r = *recovery_;
  std::uint64_t top = 0;
  for (const auto& [id, bw] : r.p1b) top = std::max(top, bw.first);
  std::optional<NodeId> best;
  std::pair<std::uint64_t, std::uint64_t> best_key{0, 0};
  for (const auto& [id, bw] : r.p1b) {
    if (r.excluded.count(id) || bw.first != top) continue;
    if (!best || bw > best_key) {
      best = id;
      best_key = bw;
    }
  }
  if (!best) {
    finish_recovery(false, "insufficient-quorum");
    return;
  }
  const NodeId d = *best;
  r.report.designated = d;
  r.report.designated_ballot = best_key.first;
  r.report.designated_index = best_key.second;
  r.report.pages_verified = 0;
  r.report.pages_repaired = 0;
  r.report.repaired_blocks.clear();
  start_repair(
      d,
      [this] {
        Recovery& rec = *recovery_;
        rec.report.repaired = env_.sim.now();
        write_index_ = rec.report.designated_index;
        if (observer_.on_repaired) observer_.on_repaired(rec.report);
        if (!alive_ || !recovery_) return;
        if (!is_primary_slot()) activate(rec.conf, rec.report.designated_index);
        rec.phase = Recovery::Phase::kReconfig;
        rec.reconfig_order.clear();
        for (const auto& m : rec.conf.members) {
          if (m != id_ && m.slot != 0) rec.reconfig_order.push_back(m);
        }
        if (rec.conf.primary() != id_) rec.reconfig_order.push_back(rec.conf.primary());
        rec.reconfig_pos = 0;
        next_reconfig();
      },
      [this, d](const std::string&) {
        if (!recovery_) return;
        recovery_->excluded.insert(d);
        ++recovery_->report.reselections;
        choose_designated();
      });
}

void Node::start_repair(const NodeId& source, std::function<void()> on_done,
                        std::function<void(const std::string&)> on_fail) {
  repair_.emplace();
  repair_->source = source;
  repair_->on_done = std::move(on_done);
  repair_->on_fail = std::move(on_fail);
  send(source, make(MsgType::kHashReq, seen_ballot_));
  arm_repair_timer();
}

void Node::arm_repair_timer() {
  const std::uint64_t token = repair_->token = next_token_++;
  env_.sim.schedule(params_.recovery_timeout, [this, token] {
    if (!alive_ || !repair_ || repair_->token != token) return;
    auto fail = std::move(repair_->on_fail);
    repair_.reset();
    fail("timeout");
  });
}

void Node::on_hash_req(const NodeId& from, const Message& msg) {
  when_drained([this, from, ballot = msg.ballot] {
    if (seen_ballot_ != ballot) return;
    std::vector<storage::Leaf> leaves;
    try {
      leaves = integrity_->all();
    } catch (const storage::IntegrityFault& e) {
      halt(e.what());
      return;
    }
    Message reply = make(MsgType::kHashResp, ballot);
    reply.write_index = write_index_;
    reply.payload.reserve(leaves.size() * storage::Leaf::kSize);
    for (const auto& l : leaves) {
      const Bytes b = l.bytes();
      reply.payload.insert(reply.payload.end(), b.begin(), b.end());
    }
    send(from, reply);
  });
}

void Node::on_page_req(const NodeId& from, const Message& msg) {
  if (msg.block >= params_.app_blocks) return;
  when_drained([this, from, ballot = msg.ballot, block = msg.block] {
    if (seen_ballot_ != ballot) return;
    Message reply = make(MsgType::kPageResp, ballot);
    reply.block = block;
    reply.payload = disk_.read_now(block);
    send(from, reply);
  });
}

void Node::on_hash_resp(const NodeId& from, const Message& msg) {
  if (!repair_ || from != repair_->source || repair_->have_leaves) return;
  if (msg.payload.size() != params_.app_blocks * storage::Leaf::kSize) return;
  Repair& rp = *repair_;
  rp.have_leaves = true;
  rp.leaves.reserve(params_.app_blocks);
  for (std::uint64_t b = 0; b < params_.app_blocks; ++b) {
    rp.leaves.push_back(storage::Leaf::parse(msg.payload.data() + b * storage::Leaf::kSize));
  }
  for (BlockId b = 0; b < params_.app_blocks; ++b) {
    if (!verify_page(b, rp.leaves[b], disk_.read_now(b))) rp.to_fetch.push_back(b);
  }
  if (recovery_) {
    recovery_->report.hashes_received = env_.sim.now();
    recovery_->report.hash_bytes += msg.payload.size();
    recovery_->report.pages_verified += params_.app_blocks;
  }
  pump_repair();
}

void Node::pump_repair() {
  Repair& rp = *repair_;
  while (rp.outstanding.size() < params_.page_window && rp.next_fetch < rp.to_fetch.size()) {
    const BlockId b = rp.to_fetch[rp.next_fetch++];
    rp.outstanding.insert(b);
    Message req = make(MsgType::kPageReq, seen_ballot_);
    req.block = b;
    send(rp.source, req);
  }
  if (rp.outstanding.empty() && rp.next_fetch == rp.to_fetch.size()) {
    integrity_->load(rp.leaves);
    auto done = std::move(rp.on_done);
    repair_.reset();
    done();
    return;
  }
  arm_repair_timer();
}

void Node::on_page_resp(const NodeId& from, const Message& msg) {
  if (!repair_ || from != repair_->source || !repair_->outstanding.count(msg.block)) return;
  Repair& rp = *repair_;
  if (msg.payload.size() != disk_.block_size() || !verify_page(msg.block, rp.leaves[msg.block], msg.payload)) {
    auto fail = std::move(rp.on_fail);
    repair_.reset();
    fail("page " + std::to_string(msg.block) + " from source fails verification");
    return;
  }
  disk_.write_durable(msg.block, msg.payload);
  rp.outstanding.erase(msg.block);
  if (recovery_) {
    ++recovery_->report.pages_repaired;
    recovery_->report.repaired_blocks.push_back(msg.block);
  }
  pump_repair();
}

void Node::next_reconfig() {
  Recovery& r = *recovery_;
  if (r.reconfig_pos == r.reconfig_order.size()) {
    if (is_primary_slot()) activate(r.conf, r.report.designated_index);
    r.phase = Recovery::Phase::kDone;
    finish_recovery(true, "");
    return;
  }
  Message m = make(MsgType::kReconfig, r.conf.ballot);
  m.write_index = r.report.designated_index;
  m.payload = r.conf.serialize();
  put_le(m.payload, r.report.designated.slot);
  put_le(m.payload, r.report.designated.incarnation);
  send(r.reconfig_order[r.reconfig_pos], m);
  arm_recovery_timer("reconfig-timeout");
}

void Node::on_reconfig_done(const NodeId& from, const Message&) {
  if (!recovery_ || recovery_->phase != Recovery::Phase::kReconfig) return;
  Recovery& r = *recovery_;
  if (r.reconfig_pos >= r.reconfig_order.size() || from != r.reconfig_order[r.reconfig_pos]) return;
  ++r.reconfig_pos;
  next_reconfig();
}

void Node::on_reconfig(const NodeId& from, const Message& msg) {
  Configuration conf;
  NodeId designated;
  try {
    Reader rd(msg.payload);
    conf = Configuration::parse(rd);
    designated.slot = rd.le<std::uint32_t>();
    designated.incarnation = rd.le<std::uint32_t>();
  } catch (const std::exception&) {
    return;
  }
  if (conf.ballot != msg.ballot || !conf.contains(id_)) return;
  if (recovery_ && msg.ballot > recovery_->conf.ballot) finish_recovery(false, "superseded");
  raise_seen(msg.ballot);

  const std::uint64_t ballot = msg.ballot;
  const std::uint64_t index = msg.write_index;
  auto reply = [this, from, ballot] {
    Message done = make(MsgType::kReconfig, ballot);
    done.flags = net::kFlagReply;
    send(from, done);
  };
  if (active() && ballot_ == ballot) {
    reply();
    return;
  }
  if (designated == id_) {
    activate(conf, index);
    reply();
    return;
  }
  if (repair_) return;  // already repairing for this Reconfig
  when_drained([this, from, ballot, index, conf, reply] {
    if (seen_ballot_ != ballot || repair_) return;
    start_repair(
        from,
        [this, ballot, index, conf, reply] {
          if (seen_ballot_ != ballot) return;
          activate(conf, index);
          reply();
        },
        [](const std::string&) {});
  });
}

}  // namespace rrbd::node
