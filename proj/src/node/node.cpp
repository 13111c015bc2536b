#include "rrbd/node/node.hpp"

#include <algorithm>

namespace rrbd::node {

using net::Message;
using net::MsgType;

Node::Node(Env env, NodeId id, storage::VirtualDisk& disk, NodeParams params)
    : env_(env), id_(id), disk_(disk), params_(params) {
  disk_.set_merkle_disk_layers(params_.merkle_disk_layers);
  integrity_ = std::make_unique<storage::IntegrityStore>(env_.cipher, params_.app_blocks,
                                                         params_.merkle_disk_layers, &disk_,
                                                         params_.app_blocks);
  integrity_->set_skip_verification(params_.mutants.skip_merkle_verify);
  env_.net.attach(id_, [this](const NodeId& from, const Message& msg) { on_message(from, msg); });
}

bool Node::fence_accepts(MsgType type, std::uint64_t msg_ballot, std::uint64_t seen, std::uint64_t ballot) {
  switch (type) {
    case MsgType::kWriteRepl:
    case MsgType::kAck:
      return msg_ballot == seen && seen == ballot;
    case MsgType::kP1a:
    case MsgType::kReconfig:
      return msg_ballot >= seen;
    case MsgType::kMatchA:
    case MsgType::kMatchB:
      return true;
    default:
      return msg_ballot == seen;
  }
}

void Node::on_message(const NodeId& from, const Message& msg) {
  if (!alive_) return;
  const bool reply = msg.type == MsgType::kReconfig && (msg.flags & net::kFlagReply);
  const bool accepted = reply ? msg.ballot == seen_ballot_
                              : fence_accepts(msg.type, msg.ballot, seen_ballot_, ballot_);
  if (net::is_data(msg.type)) {
    if (observer_.on_data) observer_.on_data(from, msg, accepted);
    ++(accepted ? counters_.data_accepted : counters_.data_rejected);
  }
  if (!accepted) return;
  switch (msg.type) {
    case MsgType::kWriteRepl: on_write_repl(from, msg); break;
    case MsgType::kAck: on_ack(from, msg); break;
    case MsgType::kMatchB:
      if (from == net::kServiceId) on_match_b(msg);
      break;
    case MsgType::kP1a: on_p1a(from, msg); break;
    case MsgType::kP1b: on_p1b(from, msg); break;
    case MsgType::kReconfig:
      if (reply) {
        on_reconfig_done(from, msg);
      } else {
        on_reconfig(from, msg);
      }
      break;
    case MsgType::kHashReq: on_hash_req(from, msg); break;
    case MsgType::kHashResp: on_hash_resp(from, msg); break;
    case MsgType::kPageReq: on_page_req(from, msg); break;
    case MsgType::kPageResp: on_page_resp(from, msg); break;
    case MsgType::kMatchA: break;
  }
}

void Node::send(const NodeId& to, Message msg) { env_.net.send(id_, to, msg); }

void Node::go_inactive(Inactive why) {
  if (observer_.on_inactive) observer_.on_inactive(why);
}

void Node::raise_seen(std::uint64_t ballot) {
  if (ballot <= seen_ballot_) return;
  const bool was_active = active();
  seen_ballot_ = ballot;
  if (was_active) {
    waiters_.clear();
    go_inactive(Inactive::kFenced);
  }
}

void Node::activate(const net::Configuration& conf, std::uint64_t write_index) {
  conf_ = conf;
  ballot_ = seen_ballot_;
  write_index_ = write_index;
  watermarks_.clear();
  for (std::size_t i = 1; i < conf_.members.size(); ++i) watermarks_[conf_.members[i]] = write_index;
  held_.clear();
  waiters_.clear();
  if (observer_.on_active) observer_.on_active();
}

void Node::crash() {
  if (!alive_) return;
  alive_ = false;
  env_.net.detach(id_);
  disk_.crash();
  gate_.clear();
  waiters_.clear();
  held_.clear();
  drain_waiters_.clear();
  repair_.reset();
  recovery_.reset();
  go_inactive(halted_ ? Inactive::kHalted : Inactive::kCrashed);
}

void Node::halt(const std::string& why) {
  if (!alive_) return;
  halted_ = true;
  halt_reason_ = why;
  crash();
}

void Node::when_drained(std::function<void()> cb) {
  if (drained()) {
    cb();
    return;
  }
  drain_waiters_.push_back(std::move(cb));
}

void Node::check_drained() {
  if (drain_waiters_.empty() || !drained()) return;
  auto waiters = std::move(drain_waiters_);
  drain_waiters_.clear();
  for (auto& cb : waiters) {
    if (alive_) cb();
  }
}

bool Node::verify_page(BlockId block, const storage::Leaf& leaf, ByteView page) const {
  if (leaf.empty()) return std::all_of(page.begin(), page.end(), [](std::uint8_t b) { return b == 0; });
  return env_.cipher.open(block, leaf, page).has_value();
}

std::uint64_t Node::ack_watermark(const NodeId& backup) const {
  auto it = watermarks_.find(backup);
  return it == watermarks_.end() ? 0 : it->second;
}

}  // namespace rrbd::node
