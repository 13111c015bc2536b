#include "rrbd/model/history.hpp"

#include <sstream>
#include <unordered_map>

namespace rrbd::model {

Event Event::read_inv(ThreadId t, BlockId b) {
  Event e;
  e.thread = t;
  e.kind = EventKind::kReadInv;
  e.block = b;
  return e;
}

Event Event::read_res(ThreadId t, BlockId b, ValueId v) {
  Event e;
  e.thread = t;
  e.kind = EventKind::kReadRes;
  e.block = b;
  e.value = v;
  return e;
}

Event Event::write_inv(ThreadId t, BlockId b, ValueId v, SyncFlags sync) {
  Event e;
  e.thread = t;
  e.kind = EventKind::kWriteInv;
  e.block = b;
  e.value = v;
  e.sync = sync;
  return e;
}

Event Event::write_res(ThreadId t, BlockId b) {
  Event e;
  e.thread = t;
  e.kind = EventKind::kWriteRes;
  e.block = b;
  return e;
}

Event Event::crash() { return Event{}; }

bool Event::same_action(const Event& o) const {
  return thread == o.thread && kind == o.kind && block == o.block && value == o.value &&
         sync == o.sync;
}

std::string to_string(const Event& e) {
  std::ostringstream out;
  switch (e.kind) {
    case EventKind::kReadInv: out << "R_inv"; break;
    case EventKind::kReadRes: out << "R_res"; break;
    case EventKind::kWriteInv: out << "W_inv"; break;
    case EventKind::kWriteRes: out << "W_res"; break;
    case EventKind::kCrash: return "C";
  }
  out << "(t" << *e.thread << ",b" << *e.block;
  if (e.value) out << ",v" << *e.value;
  if (e.kind == EventKind::kWriteInv && is_flagged(e.sync)) {
    out << (has_fua(e.sync) ? ",FUA" : "") << (has_preflush(e.sync) ? ",PREFLUSH" : "");
  }
  out << ")";
  return out.str();
}

History::History(std::vector<Event> events) : events_(std::move(events)) {
  for (std::size_t i = 0; i < events_.size(); ++i) events_[i].seq = i;
}

History& History::push(Event e) {
  e.seq = events_.size();
  events_.push_back(std::move(e));
  return *this;
}

History& History::append(const History& other) {
  for (const auto& e : other.events_) push(e);
  return *this;
}

namespace {

bool responds_to(EventKind res, EventKind inv) {
  return (res == EventKind::kReadRes && inv == EventKind::kReadInv) ||
         (res == EventKind::kWriteRes && inv == EventKind::kWriteInv);
}

std::string where(std::size_t i) { return "event " + std::to_string(i) + ": "; }

}  // namespace

std::vector<std::optional<std::size_t>> History::matching() const {
  std::vector<std::optional<std::size_t>> match(events_.size());
  std::unordered_map<ThreadId, std::size_t> outstanding;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const Event& e = events_[i];
    if (e.is_crash()) {
      if (e.thread || e.block || e.value) throw MalformedHistory(where(i) + "crash carries fields");
      outstanding.clear();
      continue;
    }
    if (!e.thread || !e.block) throw MalformedHistory(where(i) + "missing thread or block");
    if (e.is_invocation()) {
      if (e.kind == EventKind::kWriteInv && !e.value) {
        throw MalformedHistory(where(i) + "write invocation without value");
      }
      if (outstanding.count(*e.thread)) {
        throw MalformedHistory(where(i) + "thread already has an outstanding invocation");
      }
      outstanding[*e.thread] = i;
      continue;
    }
    auto it = outstanding.find(*e.thread);
    if (it == outstanding.end()) throw MalformedHistory(where(i) + "response without invocation");
    const Event& inv = events_[it->second];
    if (!responds_to(e.kind, inv.kind) || inv.block != e.block) {
      throw MalformedHistory(where(i) + "response does not match its invocation");
    }
    if (e.kind == EventKind::kReadRes && !e.value) {
      throw MalformedHistory(where(i) + "read response without value");
    }
    match[i] = it->second;
    match[it->second] = i;
    outstanding.erase(it);
  }
  return match;
}

void History::validate() const {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (events_[i].seq != i) throw MalformedHistory(where(i) + "sequence numbers must be dense");
  }
  (void)matching();
}

std::vector<History> History::eras() const {
  std::vector<History> out(1);
  for (const auto& e : events_) {
    if (e.is_crash()) {
      out.emplace_back();
    } else {
      out.back().push(e);
    }
  }
  return out;
}

History History::thread_view(ThreadId t) const {
  History out;
  for (const auto& e : events_) {
    if (e.thread == t) out.push(e);
  }
  return out;
}

bool History::has_crash() const {
  for (const auto& e : events_) {
    if (e.is_crash()) return true;
  }
  return false;
}

bool History::operator==(const History& other) const {
  if (events_.size() != other.events_.size()) return false;
  for (std::size_t i = 0; i < events_.size(); ++i) {
    if (!events_[i].same_action(other.events_[i])) return false;
  }
  return true;
}

}  // namespace rrbd::model
