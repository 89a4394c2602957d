#include "babelbot/bench.hpp"

#include "babelbot/error.hpp"

#include <chrono>
#include <thread>

namespace babelbot::bench {

namespace fs = std::filesystem;
using gateway::SessionManager;

std::int64_t mock_latency_ms(const std::string &text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h = (h ^ c) * 1099511628211ull;
  }
  return 1800 + static_cast<std::int64_t>(h % 800);
}

std::int64_t fixture_clock_ms(std::size_t index) {
  return 1'700'000'000'000 + static_cast<std::int64_t>(index) * 60'000;
}

metrics::MetricsReport replay_report(const fs::path &log, metrics::ReplayStats *stats) {
  const auto records = metrics::load_interactions(log, stats);
  if (records.empty()) {
    fail(ErrorCode::EmptyDataset, "no interaction records in " + log.string());
  }
  return metrics::build_report(records, metrics::TokenF1Scorer());
}

BenchResult run_benchmark(const BenchOptions &options) {
  const auto wall_start = std::chrono::steady_clock::now();
  const auto resources = gateway::Resources::load(options.resources_dir, options.fixtures);
  const auto &fixtures = resources.fixtures->records();
  if (fixtures.empty()) {
    fail(ErrorCode::EmptyDataset, "no fixtures in " + options.fixtures.string());
  }

  gateway::GatewayConfig config;
  config.resources_dir = options.resources_dir;
  config.data_dir = options.data_dir;
  config.default_map = options.map;
  config.mock_llm = true;
  config.fixtures = options.fixtures;
  config.async_execution = false;
  config.realtime_factor = 0.0;

  gateway::ManualClock clock;
  engine::MockLanguageModelClient client(*resources.fixtures);
  SessionManager manager(config, resources, client, clock);
  const auto id = manager.create_session({options.session, options.map, std::nullopt});

  BenchResult result;
  result.total = fixtures.size();
  result.log = manager.log_path(id);
  result.resumed_from = manager.logged_turns(id);
  if (result.resumed_from > fixtures.size()) {
    fail(ErrorCode::InvalidFormat, result.log.string() + " holds more turns than there are fixtures");
  }

  for (std::size_t i = result.resumed_from; i < fixtures.size(); ++i) {
    const auto &f = fixtures[i];
    manager.reset_world(id, i + 1);
    clock.set(fixture_clock_ms(i));
    const auto latency = mock_latency_ms(f.text);
    client.on_complete([&clock, latency](const std::string &) { clock.advance(latency); });

    const auto before = manager.logged_turns(id);
    const auto r = manager.submit_command(id, f.text, gateway::TurnAnnotation{f.lang, f.gold_actions});
    if (r.needs_confirmation) {
      const auto &positive = resources.lexicons.for_language(f.lang).positive;
      auto c = manager.confirm(id, positive.empty() ? "yes" : positive.front());
      if (c.reprompt) {
        c = manager.confirm(id, "yes");
      }
      if (c.reprompt) {
        fail(ErrorCode::Indeterminate, "approval was not recognised for fixture " + std::to_string(i));
      }
    }
    if (manager.logged_turns(id) != before + 1) {
      fail(ErrorCode::PreconditionFailed, "fixture " + std::to_string(i) + " did not log exactly one turn");
    }
    if (options.progress) {
      options.progress(i + 1, fixtures.size());
    }
    if (options.pace_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(options.pace_ms));
    }
  }

  result.report = replay_report(result.log, &result.replay);
  result.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return result;
}

} // namespace babelbot::bench
