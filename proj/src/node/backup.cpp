#include <algorithm>

#include "rrbd/node/node.hpp"

namespace rrbd::node {

using net::Message;
using net::MsgType;

void Node::on_write_repl(const NodeId& from, const Message& msg) {
  if (is_primary_slot() || conf_.members.empty() || from != conf_.primary()) return;
  if (msg.payload.size() != storage::Leaf::kSize + disk_.block_size() || msg.block >= params_.app_blocks) {
    return;
  }
  const bool flagged = (msg.flags & (net::kFlagFua | net::kFlagPreflush)) != 0;

  if (params_.mutants.backup_out_of_order) {
    admit(msg);
    if (flagged) {
      Message ack;
      ack.type = MsgType::kAck;
      ack.ballot = ballot_;
      ack.write_index = write_index_;
      send(from, ack);
      ++counters_.acks_sent;
    }
    return;
  }

  if (msg.write_index <= write_index_ || held_.count(msg.write_index)) {
    ++counters_.duplicates;
    return;
  }
  if (held_.size() >= params_.reorder_bound) {
    ++counters_.held_overflow;
    return;
  }
  held_.emplace(msg.write_index, msg);

  bool ack_due = false;
  for (auto it = held_.find(write_index_ + 1); it != held_.end(); it = held_.find(write_index_ + 1)) {
    Message next = std::move(it->second);
    held_.erase(it);
    ack_due |= (next.flags & (net::kFlagFua | net::kFlagPreflush)) != 0;
    admit(next);
  }
  if (ack_due) {
    Message ack;
    ack.type = MsgType::kAck;
    ack.ballot = ballot_;
    ack.write_index = write_index_;
    send(from, ack);
    ++counters_.acks_sent;
  }
}

void Node::admit(const Message& msg) {
  write_index_ = params_.mutants.backup_out_of_order ? std::max(write_index_, msg.write_index)
                                                     : msg.write_index;
  const storage::Leaf leaf = storage::Leaf::parse(msg.payload.data());
  Bytes ct(msg.payload.begin() + storage::Leaf::kSize, msg.payload.end());
  const auto sync = static_cast<SyncFlags>(msg.flags & (net::kFlagFua | net::kFlagPreflush));
  const BlockId block = msg.block;
  if (observer_.on_admit) observer_.on_admit(msg.write_index);
  gate_.arrive(block, 1, [this, block, leaf, ct = std::move(ct), sync](ConflictGate::OpId op) {
    try {
      integrity_->put(block, leaf);
    } catch (const storage::IntegrityFault& e) {
      halt(e.what());
      return;
    }
    disk_.submit_write(block, ct, sync, [this, op] {
      if (!alive_) return;
      gate_done(op);
    });
  });
}

}  // namespace rrbd::node
