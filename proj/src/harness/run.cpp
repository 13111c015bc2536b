#include "rrbd/harness/run.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "rrbd/harness/page_codec.hpp"

namespace rrbd::harness {

using model::Event;
using model::History;
using model::SyncFlags;

std::string verdict_name(int exit_code) {
  switch (exit_code) {
    case kExitPass: return "PASS";
    case kExitInconsistent: return "INCONSISTENT";
    case kExitHaltDetected: return "HALT-DETECTED";
    case kExitAborted: return "ABORTED";
    case kExitBudget: return "BUDGET-EXCEEDED";
  }
  return "UNKNOWN";
}

namespace {

enum class Phase { kWorkload, kRecovering, kVerify, kFinal, kDone, kHaltDetected, kAborted };

struct WriteRec {
  std::size_t event = 0;
  model::BlockId block = 0;
  model::ValueId value = 0;
  SyncFlags sync = SyncFlags::kNone;
  std::uint64_t index = 0;
  std::uint64_t era = 0;
  bool completed = false;
  sim::Time invoked_at = 0;
};

void add(LatencyStats& s, sim::Time v) {
  s.min_us = s.count == 0 ? v : std::min(s.min_us, v);
  s.max_us = std::max(s.max_us, v);
  s.mean_us += (static_cast<double>(v) - s.mean_us) / static_cast<double>(++s.count);
}

class Runner {
 public:
  explicit Runner(const RunConfig& cfg)
      : cfg_(cfg), cluster_(cfg.cluster), workload_(workload_params(cfg)), rng_(cfg.cluster.seed * 31 + 7) {
    for (std::uint32_t s = 0; s < cluster_.slots(); ++s) watch(cluster_.node(s));
    faults_ = cfg.faults;
    std::stable_sort(faults_.begin(), faults_.end(),
                     [](const FaultAction& a, const FaultAction& b) { return a.step < b.step; });
  }

  RunResult go() {
    if (!cluster_.deploy()) {
      result_.aborted = true;
      result_.abort_reason = "initialization failed";
      phase_ = Phase::kAborted;
      return finish();
    }
    for (std::uint32_t s = 0; s < cluster_.slots(); ++s) snapshots_[{s, "default"}] = cluster_.disk(s).snapshot();
    threads_.assign(cfg_.workload.threads, ThreadState{});
    fire_step(0);
    for (std::uint32_t t = 0; t < threads_.size(); ++t) schedule_issue(t);

    auto& sim = cluster_.sim();
    sim.run_while([&] { return !terminal() && sim.now() < cfg_.time_limit_us; });
    if (!terminal()) result_.stalled = true;
    return finish();
  }

 private:
  struct ThreadState {
    bool busy = false;
    bool done = false;
  };

  static WorkloadParams workload_params(const RunConfig& cfg) {
    WorkloadParams w = cfg.workload;
    w.blocks = cfg.cluster.blocks;
    w.seed = cfg.cluster.seed;
    return w;
  }

  bool terminal() const {
    return phase_ == Phase::kDone || phase_ == Phase::kHaltDetected || phase_ == Phase::kAborted;
  }

  model::ThreadId verifier() const { return static_cast<model::ThreadId>(threads_.size() + 1); }

  void watch(node::Node& n) {
    const net::NodeId id = n.id();
    n.observer().on_inactive = [this, id, np = &n](node::Inactive why) {
      if (why == node::Inactive::kHalted) result_.halt_reasons.push_back(id.to_string() + ": " + np->halt_reason());
      on_inactive(id, why);
    };
    n.observer().on_admit = [this, id](std::uint64_t index) { admitted_[id].push_back(index); };
    n.observer().on_repaired = [this](const node::RecoveryReport& r) { check_repair_source(r); };
  }

  // ---- workload ----------------------------------------------------------

  void schedule_issue(std::uint32_t t) {
    const sim::Time think = cfg_.think_max_us ? cluster_.sim().uniform(0, cfg_.think_max_us) : 0;
    const std::uint64_t era = era_;
    cluster_.sim().schedule(think, [this, t, era] {
      if (era == era_) issue(t);
    });
  }

  void issue(std::uint32_t t) {
    ThreadState& th = threads_[t];
    if (phase_ != Phase::kWorkload || th.busy || th.done) return;
    node::Node& p = cluster_.primary();
    if (!p.active()) return;
    auto op = workload_.next(t, written_);
    if (!op) {
      th.done = true;
      maybe_workload_done();
      return;
    }
    th.busy = true;
    const model::ThreadId tid = t + 1;
    const std::uint64_t era = era_;
    if (op->app_op) ++result_.app_ops;
    if (op->is_write) {
      start_write(tid, *op, [this, t, era] {
        if (era != era_) return;
        threads_[t].busy = false;
        schedule_issue(t);
      });
    } else {
      start_read(tid, op->block, [this, t, era](model::ValueId) {
        if (era != era_) return;
        threads_[t].busy = false;
        schedule_issue(t);
      });
    }
    if (op->app_op) fire_step(workload_.issued_app_ops());
  }

  void start_write(model::ThreadId tid, const Op& op, std::function<void()> then) {
    node::Node& p = cluster_.primary();
    const model::ValueId v = ++next_value_;
    const std::size_t at = h_.size();
    h_.push(Event::write_inv(tid, op.block, v, op.sync));
    written_.insert(op.block);
    const std::size_t rec = writes_.size();
    writes_.push_back(WriteRec{at, op.block, v, op.sync, 0, era_, false, cluster_.sim().now()});
    const std::uint64_t era = era_;
    const model::BlockId block = op.block;
    const std::uint64_t index = p.write(op.block, encode_page(v, cluster_.params().block_size), op.sync,
                                        [this, tid, block, rec, era, then] {
                                          if (era != era_) return;
                                          h_.push(Event::write_res(tid, block));
                                          WriteRec& w = writes_[rec];
                                          w.completed = true;
                                          add(model::is_flagged(w.sync) ? result_.flagged : result_.unflagged,
                                              cluster_.sim().now() - w.invoked_at);
                                          then();
                                        });
    writes_[rec].index = index;
    if (era == era_) by_index_[index] = rec;
  }

  void start_read(model::ThreadId tid, model::BlockId block, std::function<void(model::ValueId)> then) {
    h_.push(Event::read_inv(tid, block));
    const std::uint64_t era = era_;
    cluster_.primary().read(block, [this, tid, block, era, then](Bytes page) {
      if (era != era_) return;
      const model::ValueId v = decode_page(page);
      h_.push(Event::read_res(tid, block, v));
      then(v);
    });
  }

  void maybe_workload_done() {
    if (workload_done_) return;
    for (const auto& th : threads_) {
      if (!th.done) return;
    }
    workload_done_ = true;
    sim::Time last = 0;
    for (std::size_t i = next_fault_; i < faults_.size(); ++i) {
      schedule_fault(faults_[i]);
      last = std::max(last, faults_[i].micros);
    }
    next_fault_ = faults_.size();
    cluster_.sim().schedule(last + 1, [this] {
      drained_ = true;
      maybe_final();
    });
  }

  // The final read-back starts once the workload is done, every fault has
  // fired and no recovery is running.
  void maybe_final() {
    if (!drained_ || faults_in_flight_ > 0 || recovering_ || final_due_) return;
    final_due_ = true;
    if (phase_ == Phase::kWorkload) begin_reads(Phase::kFinal);
  }

  // ---- faults ------------------------------------------------------------

  void fire_step(std::uint64_t step) {
    while (next_fault_ < faults_.size() && faults_[next_fault_].step <= step) {
      schedule_fault(faults_[next_fault_++]);
    }
  }

  void schedule_fault(const FaultAction& a) {
    ++faults_in_flight_;
    cluster_.sim().schedule(a.micros, [this, a] {
      --faults_in_flight_;
      if (!terminal()) apply(a);
      maybe_final();
    });
  }

  void apply(const FaultAction& a) {
    auto& net = cluster_.net();
    const net::Network::Link link{a.node, a.to};
    const bool node_ok = a.node < cluster_.slots();
    switch (a.kind) {
      case FaultKind::kCrash:
        if (node_ok) cluster_.node(a.node).crash();
        break;
      case FaultKind::kSnapshot:
        if (node_ok) snapshots_[{a.node, a.name}] = cluster_.disk(a.node).snapshot();
        break;
      case FaultKind::kRollback:
        if (node_ok) cluster_.disk(a.node).restore(image(a.node, a.name));
        break;
      case FaultKind::kCrashRollback:
        if (node_ok) {
          const storage::DiskImage img = image(a.node, a.name);
          cluster_.node(a.node).crash();
          cluster_.disk(a.node).restore(img);
        }
        break;
      case FaultKind::kCorruptPage:
        if (node_ok) cluster_.disk(a.node).corrupt(a.arg % cluster_.disk(a.node).num_blocks());
        break;
      case FaultKind::kDrop: net.drop_next(link, a.count); break;
      case FaultKind::kDup: net.duplicate_next(link, a.count); break;
      case FaultKind::kCorrupt: net.corrupt_next(link, a.count); break;
      case FaultKind::kDelay: net.delay_next(link, a.count, a.arg); break;
      case FaultKind::kLinkDelay: net.set_link_delay(link, a.arg); break;
      case FaultKind::kIsolate: net.isolate(a.node, true); break;
      case FaultKind::kHeal: net.isolate(a.node, false); break;
      case FaultKind::kPause: check_backup_cuts(); break;
    }
  }

  storage::DiskImage image(std::uint32_t slot, const std::string& name) {
    auto it = snapshots_.find({slot, name});
    if (it == snapshots_.end()) it = snapshots_.find({slot, "default"});
    return it->second;
  }

  // ---- failures and recovery --------------------------------------------

  void on_inactive(const net::NodeId& id, node::Inactive why) {
    if (why != node::Inactive::kFenced) ++result_.node_failures;
    if (why == node::Inactive::kHalted) ++result_.halts;
    if (terminal()) return;
    const bool is_primary = id.slot == 0 && cluster_.primary().id() == id;
    if (is_primary) record_crash();
    if (why == node::Inactive::kFenced) return;
    if (cluster_.params().f == 0 && why == node::Inactive::kHalted) {
      result_.halt_detected = true;
      phase_ = Phase::kHaltDetected;
      return;
    }
    dead_.insert(id.slot);
    if (!recovering_) {
      recovering_ = true;
      cluster_.sim().schedule(cfg_.restart_delay_us, [this] { recover_next(); });
    }
  }

  void record_crash() {
    if (phase_ == Phase::kRecovering) return;
    h_.push(Event::crash());
    ++result_.crashes;
    ++era_;
    era_start_ = h_.size();
    phase_ = Phase::kRecovering;
    for (auto& th : threads_) th.busy = false;
    admitted_.clear();
    by_index_.clear();
    compute_obligations();
  }

  // The last completed flagged write of each block must survive, unless a
  // later write to the block may have replaced it.
  void compute_obligations() {
    obligations_.clear();
    std::map<model::BlockId, std::size_t> last_flagged;
    for (std::size_t i = 0; i < writes_.size(); ++i) {
      if (writes_[i].completed && model::is_flagged(writes_[i].sync)) last_flagged[writes_[i].block] = i;
    }
    for (const auto& [b, i] : last_flagged) {
      std::set<model::ValueId>& ok = obligations_[b];
      for (std::size_t j = i; j < writes_.size(); ++j) {
        if (writes_[j].block == b) ok.insert(writes_[j].value);
      }
    }
  }

  void recover_next() {
    if (terminal()) return;
    if (dead_.empty()) {
      recovering_ = false;
      after_recovery();
      return;
    }
    const std::uint32_t slot = dead_.count(0) ? 0 : *dead_.begin();
    dead_.erase(slot);
    node::Node& n = cluster_.restart(slot);
    watch(n);
    recovering_id_ = n.id();
    net::Configuration conf = cluster_.next_configuration(slot);
    try {
      conf.validate();
    } catch (const std::exception& e) {
      abort(std::string("no valid configuration: ") + e.what());
      return;
    }
    n.recover(conf, [this](const node::RecoveryReport& r) {
      result_.recovery_reports.push_back(r);
      if (!r.ok) {
        abort("recovery failed: " + r.error);
        return;
      }
      ++result_.recoveries;
      result_.pages_repaired += r.pages_repaired;
      cluster_.sim().post([this] { recover_next(); });
    });
  }

  void abort(const std::string& why) {
    result_.aborted = true;
    result_.abort_reason = why;
    phase_ = Phase::kAborted;
  }

  void after_recovery() {
    if (!cluster_.primary().active()) {
      abort("primary inactive after recovery");
      return;
    }
    begin_reads(Phase::kVerify);
  }

  // Reads every block written so far, one at a time, on the verifier thread.
  void begin_reads(Phase phase) {
    phase_ = phase;
    reads_.assign(written_.begin(), written_.end());
    next_read_ = 0;
    next_verify_read();
  }

  void next_verify_read() {
    if (terminal()) return;
    if (next_read_ == reads_.size()) {
      reads_done();
      return;
    }
    const model::BlockId b = reads_[next_read_++];
    const std::uint64_t era = era_;
    start_read(verifier(), b, [this, b, era](model::ValueId v) {
      if (era != era_) return;
      if (phase_ == Phase::kVerify) check_obligation(b, v);
      next_verify_read();
    });
  }

  void check_obligation(model::BlockId b, model::ValueId v) {
    auto it = obligations_.find(b);
    if (it == obligations_.end()) return;
    ++result_.sync_checks;
    if (!it->second.count(v)) {
      ++result_.sync_violations;
      result_.violations.push_back("block " + std::to_string(b) + " lost a completed flagged write (read v" +
                                   std::to_string(v) + ")");
    }
    obligations_.erase(it);
  }

  void reads_done() {
    if (phase_ == Phase::kFinal || (workload_done_ && final_due_)) {
      phase_ = Phase::kDone;
      return;
    }
    phase_ = Phase::kWorkload;
    if (workload_done_) {
      maybe_final();
      return;
    }
    for (std::uint32_t t = 0; t < threads_.size(); ++t) {
      if (!threads_[t].done) schedule_issue(t);
    }
  }

  // ---- invariant checks --------------------------------------------------

  void check_backup_cuts() {
    if (phase_ != Phase::kWorkload || !cluster_.primary().active()) return;
    node::Node& p = cluster_.primary();
    std::vector<Event> events(h_.events().begin() + static_cast<std::ptrdiff_t>(era_start_), h_.events().end());
    const History era(std::move(events));
    std::uint64_t needed = 0;
    for (const auto& [index, rec] : by_index_) {
      if (writes_[rec].completed && model::is_flagged(writes_[rec].sync)) needed = std::max(needed, index);
    }
    for (std::uint32_t s = 1; s < cluster_.slots(); ++s) {
      node::Node& b = cluster_.node(s);
      if (!b.active()) continue;
      if (p.ack_watermark(b.id()) < needed) {
        ++result_.cut_skipped;
        continue;
      }
      ++result_.cut_checks;
      std::vector<std::size_t> positions;
      bool known = true;
      for (std::uint64_t index : admitted_[b.id()]) {
        auto it = by_index_.find(index);
        if (it == by_index_.end()) {
          known = false;
          break;
        }
        positions.push_back(writes_[it->second].event - era_start_);
      }
      std::sort(positions.begin(), positions.end());
      if (!known || !model::durable_cut_with_writes(era, positions)) {
        ++result_.cut_violations;
        result_.violations.push_back("backup " + b.id().to_string() +
                                     " applied writes that are not a durable cut of the primary's era");
      }
    }
  }

  void check_repair_source(const node::RecoveryReport& r) {
    ++result_.repair_checks;
    node::Node* recovering = nullptr;
    node::Node* designated = nullptr;
    for (std::uint32_t s = 0; s < cluster_.slots(); ++s) {
      node::Node& n = cluster_.node(s);
      if (n.id() == r.designated) designated = &n;
      if (n.id() == recovering_id_) recovering = &n;
    }
    std::string problem;
    bool member = false;
    for (const auto& c : r.prior) {
      if (c.ballot == r.prior_ballot && c.contains(r.designated)) member = true;
    }
    if (!designated || !recovering) {
      problem = "designated or recovering node missing";
    } else if (r.designated_ballot != r.prior_ballot || !member) {
      problem = "designated node " + r.designated.to_string() + " was not active in the previous configuration";
    } else {
      for (model::BlockId b = 0; b < cluster_.params().blocks; ++b) {
        if (recovering->disk().read_now(b) != designated->disk().read_now(b)) {
          problem = "block " + std::to_string(b) + " differs from the designated node after repair";
          break;
        }
      }
    }
    if (!problem.empty()) {
      ++result_.repair_violations;
      result_.violations.push_back(problem);
    }
  }

  // ---- verdict -----------------------------------------------------------

  RunResult finish() {
    result_.history = h_;
    result_.sim_time = cluster_.sim().now();
    result_.net = cluster_.net().counters();
    if (cfg_.check) {
      result_.checked = true;
      try {
        auto c = model::is_crash_consistent(h_, cfg_.check_options);
        result_.consistent = c.consistent;
        if (!c.consistent) result_.explanation = c.explanation;
      } catch (const model::SizeLimitExceeded& e) {
        result_.budget_exceeded = true;
        result_.explanation = e.what();
      } catch (const model::ModelError& e) {
        result_.consistent = false;
        result_.explanation = e.what();
      }
    }
    int code = kExitPass;
    if ((result_.checked && !result_.consistent && !result_.budget_exceeded) || !result_.violations.empty()) {
      code = kExitInconsistent;
    } else if (result_.budget_exceeded) {
      code = kExitBudget;
    } else if (result_.halt_detected) {
      code = kExitHaltDetected;
    } else if (result_.aborted) {
      code = kExitAborted;
    }
    result_.exit_code = code;
    result_.verdict = verdict_name(code);
    return std::move(result_);
  }

  RunConfig cfg_;
  Cluster cluster_;
  Workload workload_;
  std::mt19937_64 rng_;
  std::vector<FaultAction> faults_;
  std::size_t next_fault_ = 0;

  History h_;
  Phase phase_ = Phase::kWorkload;
  std::uint64_t era_ = 0;
  std::size_t era_start_ = 0;
  std::vector<ThreadState> threads_;
  std::set<model::BlockId> written_;
  model::ValueId next_value_ = 0;
  std::vector<WriteRec> writes_;
  std::map<std::uint64_t, std::size_t> by_index_;
  std::map<net::NodeId, std::vector<std::uint64_t>> admitted_;
  std::map<model::BlockId, std::set<model::ValueId>> obligations_;
  std::map<std::pair<std::uint32_t, std::string>, storage::DiskImage> snapshots_;
  std::set<std::uint32_t> dead_;
  bool recovering_ = false;
  net::NodeId recovering_id_;
  bool workload_done_ = false;
  bool final_due_ = false;
  bool drained_ = false;
  std::size_t faults_in_flight_ = 0;
  std::vector<model::BlockId> reads_;
  std::size_t next_read_ = 0;
  RunResult result_;
};

std::string fixed(double v) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(1);
  out << v;
  return out.str();
}

}  // namespace

std::vector<std::pair<std::string, std::string>> RunResult::report() const {
  std::vector<std::pair<std::string, std::string>> r;
  auto u = [&](const char* k, std::uint64_t v) { r.emplace_back(k, std::to_string(v)); };
  r.emplace_back("verdict", verdict);
  u("exit_code", static_cast<std::uint64_t>(exit_code));
  u("events", history.size());
  u("app_ops", app_ops);
  u("crashes", crashes);
  u("node_failures", node_failures);
  u("halts", halts);
  u("recoveries", recoveries);
  u("pages_repaired", pages_repaired);
  u("sync_checks", sync_checks);
  u("sync_violations", sync_violations);
  u("cut_checks", cut_checks);
  u("cut_skipped", cut_skipped);
  u("cut_violations", cut_violations);
  u("repair_checks", repair_checks);
  u("repair_violations", repair_violations);
  u("stalled", stalled);
  u("aborted", aborted);
  if (aborted) r.emplace_back("abort_reason", abort_reason);
  u("checked", checked);
  u("budget_exceeded", budget_exceeded);
  u("unflagged_writes", unflagged.count);
  r.emplace_back("unflagged_mean_us", fixed(unflagged.mean_us));
  u("flagged_writes", flagged.count);
  r.emplace_back("flagged_mean_us", fixed(flagged.mean_us));
  u("flagged_min_us", flagged.min_us);
  u("net_sent", net.sent);
  u("net_delivered", net.delivered);
  u("net_dropped", net.dropped);
  u("net_duplicated", net.duplicated);
  u("net_mac_failures", net.mac_failures);
  u("sim_time_us", sim_time);
  for (std::size_t i = 0; i < recovery_reports.size(); ++i) {
    const auto& rr = recovery_reports[i];
    const std::string p = "recovery" + std::to_string(i) + "_";
    r.emplace_back(p + "ok", std::to_string(rr.ok));
    if (!rr.ok) r.emplace_back(p + "error", rr.error);
    r.emplace_back(p + "designated", rr.designated.to_string());
    r.emplace_back(p + "startup_us", std::to_string(rr.matched - rr.started));
    r.emplace_back(p + "hash_bytes", std::to_string(rr.hash_bytes));
    r.emplace_back(p + "hash_transfer_us",
                   std::to_string(rr.hashes_received > rr.matched ? rr.hashes_received - rr.matched : 0));
    r.emplace_back(p + "pages_verified", std::to_string(rr.pages_verified));
    r.emplace_back(p + "pages_repaired", std::to_string(rr.pages_repaired));
  }
  for (std::size_t i = 0; i < halt_reasons.size(); ++i) r.emplace_back("halt" + std::to_string(i), halt_reasons[i]);
  for (std::size_t i = 0; i < violations.size(); ++i) r.emplace_back("violation" + std::to_string(i), violations[i]);
  if (!explanation.empty()) r.emplace_back("explanation", explanation);
  return r;
}

std::string RunResult::report_text() const {
  std::string out;
  for (const auto& [k, v] : report()) out += k + "=" + v + "\n";
  return out;
}

RunResult run(const RunConfig& config) { return Runner(config).go(); }

}  // namespace rrbd::harness
