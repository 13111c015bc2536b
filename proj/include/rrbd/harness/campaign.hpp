#pragma once

// Campaigns: many seeded runs aggregated into one summary. All runs are
// sequential; each owns its own simulator.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rrbd/harness/run.hpp"

namespace rrbd::harness {

struct CampaignFailure {
  std::uint64_t seed = 0;
  int exit_code = 0;
  std::string schedule;
  std::string detail;
};

struct CampaignSummary {
  std::uint64_t runs = 0;
  std::uint64_t passed = 0;  // runs whose exit code was the expected one
  std::map<int, std::uint64_t> by_exit;
  std::uint64_t stalled = 0;
  std::uint64_t crashes = 0;
  std::uint64_t recoveries = 0;
  std::uint64_t pages_repaired = 0;
  std::uint64_t sync_checks = 0;
  std::uint64_t sync_violations = 0;
  std::uint64_t cut_checks = 0;
  std::uint64_t cut_violations = 0;
  std::uint64_t repair_checks = 0;
  std::uint64_t repair_violations = 0;
  std::uint64_t halts = 0;
  std::vector<CampaignFailure> failures;  // first few only
  double seconds = 0;

  void add(const RunResult& r, const RunConfig& cfg, bool expected);
  bool all_passed() const { return passed == runs; }
  std::string text() const;
};

struct FuzzOptions {
  std::uint64_t schedules = 500;
  std::uint64_t seed = 1;
  std::uint32_t nodes = 2;
  std::uint32_t f = 1;
  std::uint64_t blocks = 16;
  std::size_t block_size = 512;
  std::uint32_t threads = 3;
  std::uint64_t ops = 10;
  int merkle_disk_layers = -1;  // -1 draws L from {0,1,2} per run
  node::Mutants mutants;
  std::function<void(std::uint64_t, const RunResult&)> progress;
};

// The config for schedule `i` of a fuzz campaign (exposed for replay).
RunConfig fuzz_config(const FuzzOptions& o, std::uint64_t i);
CampaignSummary fuzz(const FuzzOptions& o);

// Every crash point of every small workload template, on primary and backup,
// with and without rollback.
struct SystematicOptions {
  std::uint64_t max_ops = 8;
  std::vector<std::uint64_t> offsets{0, 50, 150, 400};
  std::size_t block_size = 512;
  std::function<void(std::uint64_t, const RunResult&)> progress;
};
std::vector<RunConfig> systematic_configs(const SystematicOptions& o);
CampaignSummary systematic(const SystematicOptions& o);

// N=2, f=1 runs with one crash+rollback and one pause point each.
struct EndToEndOptions {
  std::uint64_t runs = 1000;
  std::uint64_t seed = 1;
  std::function<void(std::uint64_t, const RunResult&)> progress;
};
RunConfig end_to_end_config(const EndToEndOptions& o, std::uint64_t i);
CampaignSummary end_to_end(const EndToEndOptions& o);

// Single-node deployments with an online rollback: every run must end in
// HALT-DETECTED with a consistent history.
struct DetectionOptions {
  std::uint64_t runs = 200;
  std::uint64_t seed = 1;
};
RunConfig detection_config(const DetectionOptions& o, std::uint64_t i);
CampaignSummary detection(const DetectionOptions& o);

// Runs whose recovery cannot reach a quorum; each must exit with kExitAborted.
CampaignSummary unreachable_quorum(std::uint64_t seed);

struct SplitBrainSummary {
  std::uint64_t races = 0;
  std::uint64_t completed = 0;  // new primary active, both backups at the new ballot
  std::uint64_t old_sent_after_fence = 0;
  std::uint64_t old_rejected = 0;
  std::uint64_t old_accepted_after_fence = 0;
  std::uint64_t old_accepted_before_fence = 0;
  std::vector<std::string> problems;
  std::string text() const;
};
SplitBrainSummary split_brain(std::uint64_t races, std::uint64_t seed);

struct AsynchronyResult {
  sim::Time delay_us = 0;
  LatencyStats unflagged_fast;  // no extra delay
  LatencyStats unflagged_slow;  // extra one-way delay on primary -> backup
  LatencyStats flagged_slow;
  bool consistent = true;
  std::string text() const;
};
AsynchronyResult asynchrony(sim::Time delay_us, std::uint64_t seed);

}  // namespace rrbd::harness
