#pragma once

// One end-to-end run: deploy, drive the workload through the active primary,
// apply the fault schedule, recover, verify, and judge the recorded history.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rrbd/harness/cluster.hpp"
#include "rrbd/harness/fault_schedule.hpp"
#include "rrbd/harness/workload.hpp"
#include "rrbd/model/checker.hpp"
#include "rrbd/model/history.hpp"
#include "rrbd/node/node.hpp"

namespace rrbd::harness {

enum ExitCode : int {
  kExitPass = 0,
  kExitInconsistent = 1,
  kExitHaltDetected = 2,
  kExitAborted = 3,
  kExitBudget = 4,
};

struct RunConfig {
  ClusterParams cluster;
  WorkloadParams workload;  // blocks and seed are taken from `cluster`
  std::vector<FaultAction> faults;
  sim::Time think_max_us = 30;
  sim::Time restart_delay_us = 1000;
  sim::Time time_limit_us = 600'000'000;
  bool check = true;
  model::CheckOptions check_options;
};

struct LatencyStats {
  std::uint64_t count = 0;
  double mean_us = 0;
  sim::Time min_us = 0;
  sim::Time max_us = 0;
};

struct RunResult {
  int exit_code = kExitPass;
  std::string verdict = "PASS";
  model::History history;
  std::string explanation;

  bool checked = false;
  bool consistent = false;
  bool budget_exceeded = false;
  bool stalled = false;
  bool halt_detected = false;
  bool aborted = false;
  std::string abort_reason;

  std::uint64_t app_ops = 0;
  std::uint64_t crashes = 0;  // crash events in the history
  std::uint64_t node_failures = 0;
  std::uint64_t halts = 0;
  std::uint64_t recoveries = 0;
  std::uint64_t pages_repaired = 0;
  std::uint64_t sync_checks = 0;
  std::uint64_t sync_violations = 0;
  std::uint64_t cut_checks = 0;
  std::uint64_t cut_skipped = 0;
  std::uint64_t cut_violations = 0;
  std::uint64_t repair_checks = 0;
  std::uint64_t repair_violations = 0;
  std::vector<std::string> violations;
  std::vector<std::string> halt_reasons;
  std::vector<node::RecoveryReport> recovery_reports;
  LatencyStats unflagged;
  LatencyStats flagged;
  net::NetCounters net;
  sim::Time sim_time = 0;

  std::vector<std::pair<std::string, std::string>> report() const;
  std::string report_text() const;
};

RunResult run(const RunConfig& config);

std::string verdict_name(int exit_code);

}  // namespace rrbd::harness
