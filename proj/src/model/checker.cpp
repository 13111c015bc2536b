#include "rrbd/model/checker.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace rrbd::model {

// ---------------------------------------------------------------------------
// Literal definitions.

bool happens_before(const History& h, std::size_t a, std::size_t b) {
  if (a >= b || b >= h.size()) return false;
  for (std::size_t c = a; c <= b; ++c) {
    if (h[c].is_crash()) return true;
  }
  const Event& x = h[a];
  const Event& y = h[b];
  if (!x.is_response() || !y.is_invocation()) return false;
  if (x.block == y.block) return true;
  return y.kind == EventKind::kWriteInv && has_preflush(y.sync);
}

bool is_sequential(const History& h) {
  const auto match = h.matching();
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i].is_invocation() && match[i] != i + 1) return false;
  }
  return true;
}

bool reads_see_writes(const History& h) {
  const auto match = h.matching();
  for (std::size_t r = 0; r < h.size(); ++r) {
    if (h[r].kind != EventKind::kReadRes) continue;
    const std::size_t ri = *match[r];
    const BlockId b = *h[r].block;
    // Walk back to the last write invocation to b; nothing in between may be
    // a crash, and it must have completed before the read was invoked.
    bool ok = false;
    for (std::size_t k = r; k-- > 0;) {
      const Event& e = h[k];
      if (e.is_crash()) break;
      if (e.kind != EventKind::kWriteInv || e.block != b) continue;
      const auto wr = match[k];
      ok = e.value == h[r].value && wr && *wr < ri;
      break;
    }
    if (!ok) return false;
  }
  return true;
}

std::vector<History> completions(const History& h) {
  const auto match = h.matching();
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i].is_invocation() && !match[i]) pending.push_back(i);
  }
  if (pending.size() > 20) throw SizeLimitExceeded("too many pending invocations to enumerate");

  std::vector<History> out;
  for (std::uint64_t subset = 0; subset < (1ull << pending.size()); ++subset) {
    // Responses to insert, keyed by the index of the crash (or end) they precede.
    std::map<std::size_t, std::vector<Event>> inserts;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      if (!(subset >> k & 1)) continue;
      const std::size_t i = pending[k];
      std::size_t end = i;
      while (end < h.size() && !h[end].is_crash()) ++end;
      const Event& inv = h[i];
      if (inv.kind == EventKind::kWriteInv) {
        inserts[end].push_back(Event::write_res(*inv.thread, *inv.block));
      } else {
        ValueId v = kInitialValue;
        for (std::size_t j = i; j-- > 0;) {
          if (h[j].kind == EventKind::kWriteInv && h[j].block == inv.block) {
            v = *h[j].value;
            break;
          }
        }
        inserts[end].push_back(Event::read_res(*inv.thread, *inv.block, v));
      }
    }
    History c;
    for (std::size_t i = 0; i <= h.size(); ++i) {
      if (auto it = inserts.find(i); it != inserts.end()) {
        for (const auto& e : it->second) c.push(e);
      }
      if (i < h.size()) c.push(h[i]);
    }
    out.push_back(std::move(c));
  }
  return out;
}

History truncate(const History& h) {
  const auto match = h.matching();
  History out;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i].is_invocation() && !match[i]) continue;
    out.push(h[i]);
  }
  return out;
}

void require_written_before_read(const History& h) {
  std::unordered_set<BlockId> written;
  for (const auto& e : h.events()) {
    if (e.kind == EventKind::kWriteInv) written.insert(*e.block);
    if (e.kind == EventKind::kReadInv && !written.count(*e.block)) {
      throw PreconditionViolation("event " + std::to_string(e.seq) + ": read of block " +
                                  std::to_string(*e.block) + " before any write to it");
    }
  }
}

// ---------------------------------------------------------------------------
// Search machinery.

namespace {

constexpr ValueId kUntracked = std::numeric_limits<ValueId>::max();

using State = std::vector<ValueId>;

class Budget {
 public:
  explicit Budget(std::uint64_t limit) : limit_(limit) {}
  void charge() {
    if (++used_ > limit_) {
      throw SizeLimitExceeded("search exceeded " + std::to_string(limit_) + " states");
    }
  }

 private:
  std::uint64_t limit_;
  std::uint64_t used_ = 0;
};

template <std::size_t W>
struct Bits {
  std::array<std::uint64_t, W> w{};

  void set(std::size_t i) { w[i >> 6] |= 1ull << (i & 63); }
  void reset(std::size_t i) { w[i >> 6] &= ~(1ull << (i & 63)); }
  bool test(std::size_t i) const { return (w[i >> 6] >> (i & 63)) & 1; }
  bool subset_of(const Bits& o) const {
    for (std::size_t k = 0; k < W; ++k) {
      if (w[k] & ~o.w[k]) return false;
    }
    return true;
  }
  Bits operator&(const Bits& o) const {
    Bits r;
    for (std::size_t k = 0; k < W; ++k) r.w[k] = w[k] & o.w[k];
    return r;
  }
  Bits& operator|=(const Bits& o) {
    for (std::size_t k = 0; k < W; ++k) w[k] |= o.w[k];
    return *this;
  }
  bool operator==(const Bits& o) const { return w == o.w; }
  bool operator<(const Bits& o) const { return w < o.w; }
  std::size_t hash() const {
    std::size_t h = 0x9e3779b97f4a7c15ull;
    for (auto x : w) h = (h ^ x) * 0x100000001b3ull + (h >> 29);
    return h;
  }
};

template <std::size_t W>
struct Key {
  Bits<W> done;
  State state;
  bool operator==(const Key& o) const { return done == o.done && state == o.state; }
};

template <std::size_t W>
struct KeyHash {
  std::size_t operator()(const Key<W>& k) const {
    std::size_t h = k.done.hash();
    for (auto v : k.state) h = (h ^ v) * 0x100000001b3ull + (h >> 31);
    return h;
  }
};

struct Op {
  ThreadId thread = 0;
  bool write = false;
  std::size_t block = 0;  // dense index
  ValueId value = 0;
  SyncFlags sync = SyncFlags::kNone;
  std::size_t inv = 0;  // index of the invocation in the era
  std::optional<std::size_t> res;
};

// Dense numbering of every block mentioned in a history.
class BlockIndex {
 public:
  explicit BlockIndex(const History& h) {
    for (const auto& e : h.events()) {
      if (e.block && !dense_.count(*e.block)) dense_.emplace(*e.block, dense_.size());
    }
  }
  std::size_t operator()(BlockId b) const { return dense_.at(b); }
  std::size_t size() const { return dense_.size(); }

 private:
  std::unordered_map<BlockId, std::size_t> dense_;
};

// Operations of one crash-free era and the orderings among them.
template <std::size_t W>
struct EraModel {
  History era;
  std::vector<Op> ops;
  // Ops that must precede op i in any linearization: earlier ops of the same
  // thread and happens-before predecessors.
  std::vector<Bits<W>> lin_preds;
  // Transitive happens-before predecessors (durable-cut closure).
  std::vector<Bits<W>> closure;
  std::vector<Bits<W>> write_closure;  // closure restricted to writes
  Bits<W> complete;
  Bits<W> pending_writes;
  // Complete flagged writes and everything their closure drags in.
  Bits<W> forced;
  std::vector<std::size_t> writes;  // op indices in invocation order

  EraModel(History e, const BlockIndex& blocks) : era(std::move(e)) {
    const auto match = era.matching();
    for (std::size_t i = 0; i < era.size(); ++i) {
      const Event& ev = era[i];
      if (!ev.is_invocation()) continue;
      const bool write = ev.kind == EventKind::kWriteInv;
      if (!write && !match[i]) continue;  // pending reads never matter
      Op op;
      op.thread = *ev.thread;
      op.write = write;
      op.block = blocks(*ev.block);
      op.value = write ? *ev.value : *era[*match[i]].value;
      op.sync = ev.sync;
      op.inv = i;
      op.res = match[i];
      ops.push_back(op);
    }
    const std::size_t n = ops.size();
    lin_preds.resize(n);
    closure.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const Op& b = ops[j];
      if (b.res) {
        complete.set(j);
      } else {
        pending_writes.set(j);
      }
      if (b.write) writes.push_back(j);
      for (std::size_t i = 0; i < j; ++i) {
        const Op& a = ops[i];
        if (a.thread == b.thread) lin_preds[j].set(i);
        if (a.res && *a.res < b.inv &&
            (a.block == b.block || (b.write && has_preflush(b.sync)))) {
          lin_preds[j].set(i);
          closure[j].set(i);
          closure[j] |= closure[i];
        }
      }
    }
    Bits<W> all_writes;
    for (std::size_t j : writes) all_writes.set(j);
    write_closure.resize(n);
    for (std::size_t j = 0; j < n; ++j) write_closure[j] = closure[j] & all_writes;
    for (std::size_t j : writes) {
      if (ops[j].res && is_flagged(ops[j].sync)) {
        forced.set(j);
        forced |= closure[j];
      }
    }
  }
};

// Depth-first search over linearizations of a set of operations.
template <std::size_t W>
class Linearizer {
 public:
  Linearizer(const EraModel<W>& model, Budget& budget) : m_(model), budget_(budget) {}

  // Is there a linearization starting in `start` that covers `required` and
  // optionally some of `universe \ required`?
  bool exists(const Bits<W>& universe, const Bits<W>& required, const State& start,
              std::vector<std::size_t>* witness) {
    universe_ = universe;
    required_ = required;
    failed_.clear();
    path_.clear();
    state_ = start;
    Bits<W> done;
    const bool ok = search_exists(done);
    if (ok && witness) *witness = path_;
    return ok;
  }

  // Final states (projected onto `keep`) of every linearization of exactly `set`.
  void finals(const Bits<W>& set, const State& start, const std::vector<bool>& keep,
              std::set<State>& out) {
    universe_ = set;
    required_ = set;
    visited_.clear();
    state_ = start;
    keep_ = &keep;
    out_ = &out;
    Bits<W> done;
    search_all(done);
  }

 private:
  bool ready(std::size_t i, const Bits<W>& done) const {
    return universe_.test(i) && !done.test(i) && (m_.lin_preds[i] & universe_).subset_of(done);
  }

  bool search_exists(Bits<W>& done) {
    if (required_.subset_of(done)) return true;
    Key<W> key{done, state_};
    if (failed_.count(key)) return false;
    budget_.charge();
    for (std::size_t i = 0; i < m_.ops.size(); ++i) {
      if (!ready(i, done)) continue;
      const Op& op = m_.ops[i];
      ValueId& slot = state_[op.block];
      const ValueId saved = slot;
      if (!op.write) {
        if (slot != op.value) continue;
      } else if (slot != kUntracked) {
        slot = op.value;
      }
      done.set(i);
      path_.push_back(i);
      if (search_exists(done)) return true;
      path_.pop_back();
      done.reset(i);
      slot = saved;
    }
    failed_.insert(std::move(key));
    return false;
  }

  void search_all(Bits<W>& done) {
    Key<W> key{done, state_};
    if (!visited_.insert(key).second) return;
    budget_.charge();
    if (required_.subset_of(done)) {
      State projected = state_;
      for (std::size_t b = 0; b < projected.size(); ++b) {
        if (!(*keep_)[b]) projected[b] = kUntracked;
      }
      out_->insert(std::move(projected));
      return;
    }
    for (std::size_t i = 0; i < m_.ops.size(); ++i) {
      if (!ready(i, done)) continue;
      const Op& op = m_.ops[i];
      ValueId& slot = state_[op.block];
      const ValueId saved = slot;
      if (!op.write) {
        if (slot != op.value) continue;
      } else if (slot != kUntracked) {
        slot = op.value;
      }
      done.set(i);
      search_all(done);
      done.reset(i);
      slot = saved;
    }
  }

  const EraModel<W>& m_;
  Budget& budget_;
  Bits<W> universe_;
  Bits<W> required_;
  State state_;
  std::vector<std::size_t> path_;
  std::unordered_set<Key<W>, KeyHash<W>> failed_;
  std::unordered_set<Key<W>, KeyHash<W>> visited_;
  const std::vector<bool>* keep_ = nullptr;
  std::set<State>* out_ = nullptr;
};

// Calls fn(cut) for every durable cut of the era, as an op set, stopping early
// when fn returns true. Writes are decided latest first so that a write is
// either required by an already included successor or free.
//
// With `relevant` set, free writes to blocks outside it are always left out.
// `relevant` must cover every block read in this era or later: then dropping
// such a write (and the reads only it pulls in) keeps the cut closed, removes
// no constraint on the remaining reads, and can only enlarge the set of
// reachable relevant states.
template <std::size_t W>
bool for_each_cut(const EraModel<W>& m, Budget& budget,
                  const std::function<bool(const Bits<W>&)>& fn,
                  const std::vector<bool>* relevant = nullptr, const Bits<W>* excluded = nullptr) {
  const auto& writes = m.writes;
  std::function<bool(std::size_t, const Bits<W>&, const Bits<W>&)> rec =
      [&](std::size_t k, const Bits<W>& included, const Bits<W>& required) -> bool {
    if (k == 0) {
      budget.charge();
      // forced may hold reads drawn in by another block's PREFLUSH.
      Bits<W> cut = included;
      cut |= m.forced;
      for (std::size_t w : writes) {
        if (included.test(w)) cut |= m.closure[w];
      }
      return fn(cut);
    }
    const std::size_t w = writes[k - 1];
    Bits<W> with = included;
    with.set(w);
    Bits<W> with_required = required;
    with_required |= m.write_closure[w];
    if (required.test(w)) return rec(k - 1, with, with_required);
    if (rec(k - 1, included, required)) return true;
    if (excluded && excluded->test(w)) return false;
    if (relevant && !(*relevant)[m.ops[w].block]) return false;
    return rec(k - 1, with, with_required);
  };
  return rec(writes.size(), Bits<W>{}, m.forced);
}

template <std::size_t W>
DurableCut materialize_cut(const EraModel<W>& m, const Bits<W>& cut) {
  DurableCut out;
  std::vector<std::size_t> resolved_pending;
  for (std::size_t i = 0; i < m.ops.size(); ++i) {
    if (cut.test(i) && !m.ops[i].res) resolved_pending.push_back(i);
  }
  out.completed = m.era;
  std::unordered_map<std::size_t, std::size_t> res_of;  // op -> index in completed
  for (std::size_t i : resolved_pending) {
    const Op& op = m.ops[i];
    const Event& inv = m.era[op.inv];
    res_of[i] = out.completed.size();
    out.completed.push(Event::write_res(*inv.thread, *inv.block));
    out.completed_pending.push_back(op.inv);
  }
  for (std::size_t i = 0; i < m.ops.size(); ++i) {
    if (!cut.test(i)) continue;
    out.kept.push_back(m.ops[i].inv);
    out.kept.push_back(m.ops[i].res ? *m.ops[i].res : res_of.at(i));
  }
  std::sort(out.kept.begin(), out.kept.end());
  return out;
}

template <std::size_t W>
LinearizabilityResult linearizable_impl(const History& h, const CheckOptions& options) {
  Budget budget(options.state_budget);
  BlockIndex blocks(h);
  EraModel<W> m(h, blocks);
  Linearizer<W> lin(m, budget);
  Bits<W> universe = m.complete;
  universe |= m.pending_writes;
  State start(blocks.size(), kInitialValue);
  std::vector<std::size_t> path;
  LinearizabilityResult result;
  result.linearizable = lin.exists(universe, m.complete, start, &path);
  if (result.linearizable) {
    for (std::size_t i : path) {
      const Event& inv = m.era[m.ops[i].inv];
      result.witness.push(inv);
      if (m.ops[i].res) {
        result.witness.push(m.era[*m.ops[i].res]);
      } else {
        result.witness.push(Event::write_res(*inv.thread, *inv.block));
      }
    }
  }
  return result;
}

// Search over durable cuts era by era. sigma is the set of states (projected
// onto blocks still read) reachable by linearizing the cuts chosen so far.
template <std::size_t W>
class CrashChecker {
 public:
  // excluded[i]: ops of era i that no cut may contain.
  CrashChecker(std::vector<EraModel<W>> models, std::size_t nblocks, Budget& budget,
               std::vector<Bits<W>> excluded = {})
      : budget_(budget), nblocks_(nblocks), models_(std::move(models)), excluded_(std::move(excluded)) {
    excluded_.resize(models_.size());
    // relevant_[i][b]: block b is read by a complete read in era i or later.
    relevant_.assign(models_.size() + 1, std::vector<bool>(nblocks_, false));
    for (std::size_t i = models_.size(); i-- > 0;) {
      relevant_[i] = relevant_[i + 1];
      for (const Op& op : models_[i].ops) {
        if (!op.write) relevant_[i][op.block] = true;
      }
    }
    for (const auto& m : models_) linearizers_.emplace_back(m, budget_);
  }

  bool run() {
    State init(nblocks_, kUntracked);
    for (std::size_t b = 0; b < nblocks_; ++b) {
      if (relevant_[0][b]) init[b] = kInitialValue;
    }
    cuts_.assign(models_.size() > 0 ? models_.size() - 1 : 0, Bits<W>{});
    return dfs(0, {init});
  }

  const std::vector<EraModel<W>>& models() const { return models_; }
  const std::vector<Bits<W>>& cuts() const { return cuts_; }
  std::size_t deepest_failure() const { return deepest_failure_; }

 private:
  bool era_linearizable(std::size_t i, const std::set<State>& sigma) {
    const auto& m = models_[i];
    Bits<W> universe = m.complete;
    universe |= m.pending_writes;
    for (const State& s : sigma) {
      if (linearizers_[i].exists(universe, m.complete, s, nullptr)) return true;
    }
    return false;
  }

  bool dfs(std::size_t i, const std::set<State>& sigma) {
    if (!era_linearizable(i, sigma)) {
      deepest_failure_ = std::max(deepest_failure_, i);
      return false;
    }
    if (i + 1 == models_.size()) return true;
    auto memo_key = std::make_pair(i, sigma);
    if (failed_.count(memo_key)) return false;

    std::set<std::set<State>> tried;
    const bool found = for_each_cut<W>(
        models_[i], budget_,
        [&](const Bits<W>& cut) {
          std::set<State> next;
          for (const State& s : sigma) linearizers_[i].finals(cut, s, relevant_[i + 1], next);
          if (next.empty() || !tried.insert(next).second) return false;
          if (dfs(i + 1, next)) {
            cuts_[i] = cut;
            return true;
          }
          return false;
        },
        &relevant_[i], &excluded_[i]);
    if (!found) failed_.insert(std::move(memo_key));
    return found;
  }

  Budget& budget_;
  std::size_t nblocks_;
  std::vector<EraModel<W>> models_;
  std::vector<Bits<W>> excluded_;
  std::vector<Linearizer<W>> linearizers_;
  std::vector<std::vector<bool>> relevant_;
  std::vector<Bits<W>> cuts_;
  std::set<std::pair<std::size_t, std::set<State>>> failed_;
  std::size_t deepest_failure_ = 0;
};

template <std::size_t W>
std::string explain(const std::vector<EraModel<W>>& models, std::size_t k, std::optional<BlockId> block) {
  std::ostringstream out;
  out << "era " << k << " has no linearization";
  if (block) out << " of block " << *block;
  if (k > 0) {
    out << " after any durable cut of the preceding era" << (k > 1 ? "s" : "");
    std::vector<std::string> forced;
    for (std::size_t i = 0; i < k; ++i) {
      const auto& m = models[i];
      for (std::size_t j = 0; j < m.ops.size(); ++j) {
        const Event& inv = m.era[m.ops[j].inv];
        if (!m.ops[j].write || !m.ops[j].res || !is_flagged(m.ops[j].sync)) continue;
        if (block && *inv.block != *block && !has_preflush(m.ops[j].sync)) continue;
        forced.push_back("era " + std::to_string(i) + " " + to_string(inv));
      }
    }
    if (!forced.empty()) {
      out << "; writes forced into every cut by persistence flags:";
      for (const auto& f : forced) out << " " << f << ";";
    }
  }
  return out.str();
}

// One search over all blocks at once.
template <std::size_t W>
CrashConsistencyResult crash_consistent_joint(const History& h, const CheckOptions& options) {
  Budget budget(options.state_budget);
  BlockIndex blocks(h);
  std::vector<EraModel<W>> models;
  for (auto& era : h.eras()) models.emplace_back(std::move(era), blocks);
  CrashChecker<W> checker(std::move(models), blocks.size(), budget);
  CrashConsistencyResult result;
  result.consistent = checker.run();
  if (result.consistent) {
    for (std::size_t i = 0; i + 1 < checker.models().size(); ++i) {
      result.cuts.push_back(materialize_cut(checker.models()[i], checker.cuts()[i]).history());
    }
  } else {
    result.failing_era = checker.deepest_failure();
    result.explanation = explain(checker.models(), result.failing_era, std::nullopt);
  }
  return result;
}

// Block-by-block search.
//
// Linearizability of registers is local: the ordering constraints among
// operations are contained in real-time order and coincide with it on each
// block, so a history (era, or cut of an era) linearizes iff every block's
// sub-history does, and the reachable end states are the product of the
// per-block ones. Blocks interact only through durable-cut closure, and the
// only closure edges that cross blocks and are not already forced come from
// pending PREFLUSH writes (a complete one is forced; a pending one is in no
// other op's closure). Fixing, for every era, which pending PREFLUSH writes
// the cut contains therefore leaves independent per-block problems.
template <std::size_t W>
CrashConsistencyResult crash_consistent_by_block(const History& h, const CheckOptions& options) {
  Budget budget(options.state_budget);
  BlockIndex blocks(h);
  const auto eras = h.eras();
  std::vector<EraModel<W>> global;
  for (const auto& era : eras) global.emplace_back(era, blocks);
  const std::size_t nblocks = blocks.size();

  // Per-block histories and models; global_of maps a local op back.
  std::vector<BlockId> block_id(nblocks);
  for (const auto& e : h.events()) {
    if (e.block) block_id[blocks(*e.block)] = *e.block;
  }
  std::vector<std::vector<EraModel<W>>> local(nblocks);
  std::vector<std::vector<std::vector<std::size_t>>> global_of(nblocks);     // [block][era][local op]
  for (std::size_t b = 0; b < nblocks; ++b) {
    History sub;
    for (const auto& e : h.events()) {
      if (e.is_crash() || (e.block && blocks(*e.block) == b)) sub.push(e);
    }
    BlockIndex one(sub);
    for (auto& era : sub.eras()) local[b].emplace_back(std::move(era), one);
    global_of[b].resize(eras.size());
  }
  std::vector<std::vector<std::size_t>> pending_preflush(eras.size());
  for (std::size_t i = 0; i < eras.size(); ++i) {
    const auto& m = global[i];
    for (std::size_t j = 0; j < m.ops.size(); ++j) {
      const std::size_t b = m.ops[j].block;
      global_of[b][i].push_back(j);
      if (m.ops[j].write && !m.ops[j].res && has_preflush(m.ops[j].sync)) pending_preflush[i].push_back(j);
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> choices;  // (era, op), last era excluded
  for (std::size_t i = 0; i + 1 < eras.size(); ++i) {
    for (std::size_t j : pending_preflush[i]) choices.emplace_back(i, j);
  }
  if (choices.size() > 20) {
    throw SizeLimitExceeded(std::to_string(choices.size()) + " pending PREFLUSH writes across crashes");
  }

  CrashConsistencyResult result;
  std::size_t deepest = 0;
  std::optional<BlockId> deepest_block;
  for (std::uint64_t mask = 0; mask < (1ull << choices.size()); ++mask) {
    budget.charge();
    std::vector<Bits<W>> required(eras.size());
    std::vector<Bits<W>> excluded(eras.size());
    for (std::size_t i = 0; i < eras.size(); ++i) required[i] = global[i].forced;
    for (std::size_t c = 0; c < choices.size(); ++c) {
      const auto [i, j] = choices[c];
      if (mask >> c & 1) {
        required[i].set(j);
        required[i] |= global[i].closure[j];
      } else {
        excluded[i].set(j);
      }
    }
    bool all = true;
    std::vector<Bits<W>> witness(eras.size() > 0 ? eras.size() - 1 : 0);
    for (std::size_t i = 0; i < witness.size(); ++i) witness[i] = required[i];
    for (std::size_t b = 0; b < nblocks && all; ++b) {
      std::vector<EraModel<W>> models = local[b];
      std::vector<Bits<W>> local_excluded(eras.size());
      for (std::size_t i = 0; i < eras.size(); ++i) {
        for (std::size_t l = 0; l < global_of[b][i].size(); ++l) {
          const std::size_t j = global_of[b][i][l];
          if (required[i].test(j)) models[i].forced.set(l);
          if (excluded[i].test(j)) local_excluded[i].set(l);
        }
      }
      CrashChecker<W> checker(std::move(models), 1, budget, std::move(local_excluded));
      if (!checker.run()) {
        all = false;
        if (!deepest_block || checker.deepest_failure() > deepest) {
          deepest = checker.deepest_failure();
          deepest_block = block_id[b];
        }
        break;
      }
      for (std::size_t i = 0; i < witness.size(); ++i) {
        for (std::size_t l = 0; l < global_of[b][i].size(); ++l) {
          if (checker.cuts()[i].test(l)) witness[i].set(global_of[b][i][l]);
        }
      }
    }
    if (all) {
      result.consistent = true;
      for (std::size_t i = 0; i < witness.size(); ++i) {
        result.cuts.push_back(materialize_cut(global[i], witness[i]).history());
      }
      return result;
    }
  }
  result.failing_era = deepest;
  result.explanation = explain(global, deepest, deepest_block);
  return result;
}

std::size_t max_ops_per_era(const History& h) {
  std::size_t best = 0;
  std::size_t cur = 0;
  for (const auto& e : h.events()) {
    if (e.is_crash()) {
      cur = 0;
    } else if (e.is_invocation()) {
      best = std::max(best, ++cur);
    }
  }
  return best;
}

template <typename F>
auto dispatch_width(std::size_t ops, F&& f) {
  if (ops <= 64) return f(std::integral_constant<std::size_t, 1>{});
  if (ops <= 256) return f(std::integral_constant<std::size_t, 4>{});
  if (ops <= 1024) return f(std::integral_constant<std::size_t, 16>{});
  if (ops <= 4096) return f(std::integral_constant<std::size_t, 64>{});
  throw SizeLimitExceeded("era with " + std::to_string(ops) + " operations is beyond desk scale");
}

}  // namespace

History DurableCut::history() const {
  History out;
  for (std::size_t i : kept) out.push(completed[i]);
  return out;
}

LinearizabilityResult is_linearizable(const History& h, const CheckOptions& options) {
  h.validate();
  if (h.has_crash()) throw PreconditionViolation("linearizability is defined on crash-free histories");
  require_written_before_read(h);
  return dispatch_width(max_ops_per_era(h), [&](auto width) {
    return linearizable_impl<decltype(width)::value>(h, options);
  });
}

std::vector<DurableCut> durable_cuts(const History& era, const CheckOptions& options) {
  era.validate();
  if (era.has_crash()) throw PreconditionViolation("durable cuts are taken of a crash-free era");
  return dispatch_width(max_ops_per_era(era), [&](auto width) {
    constexpr std::size_t W = decltype(width)::value;
    Budget budget(options.state_budget);
    BlockIndex blocks(era);
    EraModel<W> m(era, blocks);
    std::vector<DurableCut> out;
    for_each_cut<W>(m, budget, [&](const Bits<W>& cut) {
      out.push_back(materialize_cut(m, cut));
      return false;
    });
    return out;
  });
}

std::optional<DurableCut> durable_cut_with_writes(const History& era,
                                                  std::span<const std::size_t> write_invocations) {
  era.validate();
  if (era.has_crash()) throw PreconditionViolation("durable cuts are taken of a crash-free era");
  return dispatch_width(max_ops_per_era(era), [&](auto width) -> std::optional<DurableCut> {
    constexpr std::size_t W = decltype(width)::value;
    BlockIndex blocks(era);
    EraModel<W> m(era, blocks);
    std::unordered_map<std::size_t, std::size_t> op_of_inv;
    for (std::size_t i = 0; i < m.ops.size(); ++i) op_of_inv[m.ops[i].inv] = i;
    Bits<W> writes;
    for (std::size_t inv : write_invocations) {
      auto it = op_of_inv.find(inv);
      if (it == op_of_inv.end() || !m.ops[it->second].write) return std::nullopt;
      writes.set(it->second);
    }
    for (std::size_t w : m.writes) {
      if (m.forced.test(w) && !writes.test(w)) return std::nullopt;
    }
    Bits<W> cut = writes;
    for (std::size_t i = 0; i < m.ops.size(); ++i) {
      if (writes.test(i)) cut |= m.closure[i];
    }
    for (std::size_t i = 0; i < m.ops.size(); ++i) {
      if (cut.test(i) && m.ops[i].write && !writes.test(i)) return std::nullopt;
    }
    return materialize_cut(m, cut);
  });
}

CrashConsistencyResult is_crash_consistent(const History& h, const CheckOptions& options) {
  h.validate();
  require_written_before_read(h);
  return dispatch_width(max_ops_per_era(h), [&](auto width) {
    return crash_consistent_by_block<decltype(width)::value>(h, options);
  });
}

CrashConsistencyResult is_crash_consistent_joint(const History& h, const CheckOptions& options) {
  h.validate();
  require_written_before_read(h);
  return dispatch_width(max_ops_per_era(h), [&](auto width) {
    return crash_consistent_joint<decltype(width)::value>(h, options);
  });
}

}  // namespace rrbd::model
