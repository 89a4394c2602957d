#pragma once

#include "babelbot/gateway.hpp"
#include "babelbot/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

namespace babelbot::bench {

struct BenchOptions {
  std::filesystem::path fixtures;      // JSONL corpus with gold actions
  std::filesystem::path resources_dir; // profiles, lexicons, responses, maps
  std::filesystem::path data_dir;      // log goes to <data_dir>/<session>.jsonl
  std::string session = "bench";
  std::string map = "office";
  /// Wall-clock sleep after each fixture; lets tests interrupt a run midway.
  int pace_ms = 0;
  std::function<void(std::size_t index, std::size_t total)> progress;
};

struct BenchResult {
  std::size_t total = 0;
  std::size_t resumed_from = 0; // fixtures already in the log at start
  std::filesystem::path log;
  metrics::MetricsReport report;
  metrics::ReplayStats replay;
  double wall_s = 0.0;
};

/// Fixed simulated latency for a fixture, 1800 to 2599 ms.
std::int64_t mock_latency_ms(const std::string &text);
/// Simulated instruction time of fixture `index`.
std::int64_t fixture_clock_ms(std::size_t index);

/// Runs every fixture through a session with the mock client, approving each
/// pending plan with the first positive template of the fixture's language.
/// Picks up after the last fixture already logged, so a killed run resumes
/// where it stopped and its log replays to the same report as an unbroken one.
BenchResult run_benchmark(const BenchOptions &options);

/// Report computed from a session log with the token-F1 scorer.
metrics::MetricsReport replay_report(const std::filesystem::path &log, metrics::ReplayStats *stats = nullptr);

} // namespace babelbot::bench
