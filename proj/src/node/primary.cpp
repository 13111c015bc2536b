#include <algorithm>
#include <limits>

#include "rrbd/node/node.hpp"

namespace rrbd::node {

using net::Message;
using net::MsgType;

std::uint64_t Node::write(BlockId block, ByteView plaintext, SyncFlags sync, std::function<void()> done) {
  if (!active() || !is_primary_slot()) throw NotActive(id_.to_string() + " is not an active primary");
  if (block >= params_.app_blocks) throw storage::OutOfRange("block " + std::to_string(block));
  if (write_index_ == std::numeric_limits<std::uint64_t>::max()) throw std::overflow_error("write index");

  const std::uint64_t index = ++write_index_;
  storage::Leaf leaf;
  Bytes ct = env_.cipher.seal(ballot_, block, index, plaintext, leaf);

  Message m;
  m.type = MsgType::kWriteRepl;
  m.ballot = ballot_;
  m.write_index = index;
  m.block = block;
  m.flags = static_cast<std::uint8_t>(sync);
  m.payload = leaf.bytes();
  m.payload.insert(m.payload.end(), ct.begin(), ct.end());
  for (std::size_t i = 1; i < conf_.members.size(); ++i) send(conf_.members[i], m);

  const bool flagged = model::is_flagged(sync);
  if (flagged) waiters_[index] = SyncWaiter{std::move(done), false};
  ++counters_.writes;

  gate_.arrive(block, 1, [this, block, leaf, ct = std::move(ct), sync, index, flagged,
                          done = flagged ? std::function<void()>{} : std::move(done)](ConflictGate::OpId op) {
    try {
      integrity_->put(block, leaf);
    } catch (const storage::IntegrityFault& e) {
      halt(e.what());
      return;
    }
    disk_.submit_write(block, ct, sync, [this, op, index, flagged, done] {
      if (!alive_) return;
      gate_done(op);
      if (!flagged) {
        if (done) done();
        return;
      }
      if (auto it = waiters_.find(index); it != waiters_.end()) {
        it->second.disk_done = true;
        release_sync();
      }
    });
  });
  return index;
}

void Node::read(BlockId block, std::function<void(Bytes)> done) {
  if (!active() || !is_primary_slot()) throw NotActive(id_.to_string() + " is not an active primary");
  if (block >= params_.app_blocks) throw storage::OutOfRange("block " + std::to_string(block));
  ++counters_.reads;
  gate_.arrive(block, 1, [this, block, done = std::move(done)](ConflictGate::OpId op) {
    disk_.submit_read(block, [this, block, op, done](Bytes ct) {
      if (!alive_) return;
      // The leaf must be read before the gate lets a queued write to this
      // block install its own.
      storage::Leaf leaf;
      try {
        leaf = integrity_->get(block);
      } catch (const storage::IntegrityFault& e) {
        halt(e.what());
        return;
      }
      gate_done(op);
      if (leaf.empty()) {
        if (!verify_page(block, leaf, ct)) {
          halt("block " + std::to_string(block) + " has data but no hash");
          return;
        }
        done(Bytes(ct.size(), 0));
        return;
      }
      auto pt = env_.cipher.open(block, leaf, ct);
      if (!pt) {
        halt("block " + std::to_string(block) + " fails authentication");
        return;
      }
      done(std::move(*pt));
    });
  });
}

void Node::gate_done(ConflictGate::OpId op) {
  gate_.finish(op);
  check_drained();
}

std::uint64_t Node::quorum_index() const {
  if (conf_.f == 0) return std::numeric_limits<std::uint64_t>::max();
  std::vector<std::uint64_t> marks;
  for (std::size_t i = 1; i < conf_.members.size(); ++i) marks.push_back(ack_watermark(conf_.members[i]));
  if (marks.size() < conf_.f) return 0;
  std::sort(marks.begin(), marks.end(), std::greater<>());
  return marks[conf_.f - 1];
}

void Node::on_ack(const NodeId& from, const Message& msg) {
  if (!is_primary_slot() || !conf_.contains(from)) return;
  auto& mark = watermarks_[from];
  mark = std::max(mark, msg.write_index);
  release_sync();
}

void Node::release_sync() {
  const std::uint64_t q = quorum_index();
  std::vector<std::function<void()>> ready;
  for (auto it = waiters_.begin(); it != waiters_.end();) {
    const bool covered = params_.mutants.ack_off_by_one ? it->first <= q + 1 : it->first <= q;
    if (!covered) break;
    if (it->second.disk_done) {
      ready.push_back(std::move(it->second.done));
      it = waiters_.erase(it);
    } else {
      ++it;
    }
  }
  for (auto& cb : ready) {
    if (cb) cb();
  }
}

}  // namespace rrbd::node
