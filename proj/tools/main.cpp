#include "babelbot/bench.hpp"
#include "babelbot/error.hpp"
#include "babelbot/gateway.hpp"
#include "babelbot/langid.hpp"
#include "babelbot/metrics.hpp"
#include "babelbot/server.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace babelbot;
using nlohmann::json;

namespace {

const fs::path kData = BABELBOT_DATA_DIR;

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) {
    fail(ErrorCode::IoError, "cannot read " + p.string());
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path &p, const std::string &content) {
  if (p.has_parent_path()) {
    fs::create_directories(p.parent_path());
  }
  // write beside, then rename, so a reader never sees half a report
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) {
      fail(ErrorCode::IoError, "cannot write " + tmp.string());
    }
  }
  fs::rename(tmp, p);
}

int build_profiles(const fs::path &corpus_dir, const fs::path &out_dir, std::size_t max_entries) {
  fs::create_directories(out_dir);
  std::vector<fs::path> files;
  for (const auto &e : fs::directory_iterator(corpus_dir)) {
    if (e.path().extension() == ".txt") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto &f : files) {
    const auto out = out_dir / (f.stem().string() + ".tsv");
    langid::write_profile(out, langid::trigram_frequencies(slurp(f)), max_entries);
    std::cout << out.string() << '\n';
  }
  return 0;
}

/// Registers a map given as a file path; a bare name must already be bundled.
std::string resolve_map(gateway::Resources &res, const std::string &map) {
  if (fs::is_regular_file(map)) {
    const auto stem = fs::path(map).stem().string();
    res.maps.insert_or_assign(stem, sim::OccupancyGrid::load(map));
    return stem;
  }
  return map;
}

std::unique_ptr<engine::LanguageModelClient> make_client(const gateway::GatewayConfig &config,
                                                         const gateway::Resources &res) {
  if (config.mock_llm) {
    if (!res.fixtures) {
      fail(ErrorCode::PreconditionFailed, "the mock client needs a fixture corpus (--fixtures)");
    }
    return std::make_unique<engine::MockLanguageModelClient>(*res.fixtures);
  }
  return std::make_unique<engine::HttpLanguageModelClient>(config.llm);
}

// ---------------------------------------------------------------------------

struct ServeArgs {
  std::string config_file;
  std::string host;
  int port = -1;
  bool mock = false;
  std::string fixtures;
  std::string data_dir;
};

int serve(const ServeArgs &a) {
  auto config = a.config_file.empty() ? gateway::GatewayConfig{} : gateway::GatewayConfig::load(a.config_file);
  if (config.resources_dir.empty()) {
    config.resources_dir = kData;
  }
  config.apply_env();
  if (!a.host.empty()) {
    config.host = a.host;
  }
  if (a.port >= 0) {
    config.port = a.port;
  }
  if (a.mock) {
    config.mock_llm = true;
  }
  if (!a.fixtures.empty()) {
    config.fixtures = a.fixtures;
  }
  if (config.mock_llm && config.fixtures.empty()) {
    config.fixtures = kData / "fixtures" / "corpus.jsonl";
  }
  if (!a.data_dir.empty()) {
    config.data_dir = a.data_dir;
  }
  config.validate();

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr); // before any thread starts

  const auto res = gateway::Resources::load(config.resources_dir, config.fixtures);
  auto client = make_client(config, res);
  gateway::SystemClock clock;
  gateway::SessionManager manager(config, res, *client, clock);
  gateway::GatewayServer server(manager);
  const int port = server.start(config.host, config.port);
  std::cout << "listening on " << config.host << ':' << port << (config.mock_llm ? " (mock llm)" : "") << std::endl;
  int sig = 0;
  sigwait(&signals, &sig);
  std::cout << "shutting down" << std::endl;
  server.stop();
  return 0;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string map = "office";
  std::string script;
  std::string data_dir = "babelbot-sim";
  std::string fixtures = (kData / "fixtures" / "corpus.jsonl").string();
  bool live_llm = false;
  bool auto_approve = true;
  std::string language;
};

/// Script format: one command per line. "> text" answers the pending plan;
/// "# ..." and blank lines are ignored.
int simulate(const SimulateArgs &a) {
  auto res = gateway::Resources::load(kData, a.fixtures);
  gateway::GatewayConfig config;
  config.resources_dir = kData;
  config.data_dir = a.data_dir;
  config.default_map = resolve_map(res, a.map);
  config.mock_llm = !a.live_llm;
  config.async_execution = false;
  config.realtime_factor = 0.0;
  config.llm.apply_env();
  auto client = make_client(config, res);
  gateway::SystemClock clock;
  gateway::SessionManager manager(config, res, *client, clock);
  gateway::SessionOptions opt;
  if (!a.language.empty()) {
    opt.language_override = a.language;
  }
  const auto id = manager.create_session(opt);

  std::istringstream script(slurp(a.script));
  auto print = [](json j) { std::cout << j.dump() << '\n'; };
  auto trace_line = [&](const std::optional<exec::ExecutionTrace> &t) {
    if (t) {
      print({{"trace", exec::to_json(*t)}});
    }
  };
  for (std::string line; std::getline(script, line);) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') {
      continue;
    }
    line = line.substr(first);
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    if (line.rfind("> ", 0) == 0) {
      const auto c = manager.confirm(id, line.substr(2));
      print({{"reply", line.substr(2)}, {"executed", c.executed}, {"reprompt", c.reprompt}, {"text", c.reply_text}});
      trace_line(c.trace);
      continue;
    }
    const auto r = manager.submit_command(id, line);
    print({{"command", line}, {"language", r.language}, {"text", r.reply_text}, {"plan", r.plan}});
    trace_line(r.trace);
    if (r.needs_confirmation && a.auto_approve) {
      const auto c = manager.confirm(id, "yes");
      print({{"reply", "yes"}, {"executed", c.executed}, {"text", c.reply_text}});
      trace_line(c.trace);
    }
  }
  print({{"final", manager.state(id)}});
  return 0;
}

// ---------------------------------------------------------------------------

int replay(const std::string &log, const std::string &report, const std::string &json_out) {
  metrics::ReplayStats stats;
  const auto r = bench::replay_report(log, &stats);
  const auto csv = metrics::to_csv(r);
  if (report.empty()) {
    std::cout << csv;
  } else {
    write_file(report, csv);
  }
  if (!json_out.empty()) {
    write_file(json_out, metrics::to_json(r).dump(2) + "\n");
  }
  std::cerr << stats.records << " interactions, " << stats.skipped << " other lines"
            << (stats.torn_tail ? ", torn final line dropped" : "") << '\n';
  return 0;
}

struct BenchArgs {
  std::string fixtures = (kData / "fixtures" / "corpus.jsonl").string();
  bool mock = false;
  std::string data_dir = "babelbot-bench";
  std::string report;
  std::string json_out;
  std::string map = "office";
  int pace_ms = 0;
  bool quiet = false;
};

int run_bench(const BenchArgs &a) {
  if (!a.mock) {
    fail(ErrorCode::PreconditionFailed, "bench is deterministic only with --mock-llm");
  }
  bench::BenchOptions opt;
  opt.fixtures = a.fixtures;
  opt.resources_dir = kData;
  opt.data_dir = a.data_dir;
  opt.map = a.map;
  opt.pace_ms = a.pace_ms;
  if (!a.quiet) {
    opt.progress = [](std::size_t i, std::size_t n) { std::cerr << "\r" << i << "/" << n << std::flush; };
  }
  const auto r = bench::run_benchmark(opt);
  if (!a.quiet) {
    std::cerr << '\n';
  }
  const auto csv = metrics::to_csv(r.report);
  if (a.report.empty()) {
    std::cout << csv;
  } else {
    write_file(a.report, csv);
  }
  if (!a.json_out.empty()) {
    write_file(a.json_out, metrics::to_json(r.report).dump(2) + "\n");
  }
  std::cerr << "log " << r.log.string() << ", resumed at " << r.resumed_from << "/" << r.total << ", IPA "
            << r.report.overall.ipa << ", TSR " << r.report.overall.tsr << ", " << r.wall_s << " s\n";
  return 0;
}

int translate_qc(const std::string &dataset, const std::string &out) {
  const auto records = metrics::load_translations(dataset);
  const auto csv = metrics::translation_csv(metrics::translation_qc(records));
  if (out.empty()) {
    std::cout << csv;
  } else {
    write_file(out, csv);
  }
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"babelbot: multilingual instruction-to-action workbench"};
  app.require_subcommand(1);

  auto *serve_cmd = app.add_subcommand("serve", "Run the HTTP/WebSocket gateway");
  ServeArgs sa;
  serve_cmd->add_option("--config", sa.config_file, "JSON config file");
  serve_cmd->add_option("--host", sa.host, "Listen address");
  serve_cmd->add_option("--port", sa.port, "Listen port (0 picks one)");
  serve_cmd->add_flag("--mock-llm", sa.mock, "Answer from the fixture corpus instead of an LLM endpoint");
  serve_cmd->add_option("--fixtures", sa.fixtures, "Fixture corpus for the mock client");
  serve_cmd->add_option("--data-dir", sa.data_dir, "Directory for session logs and snapshots");

  auto *sim_cmd = app.add_subcommand("simulate", "Run a script of commands against one simulated session");
  SimulateArgs sim;
  sim_cmd->add_option("--map", sim.map, "Bundled map name or path to a map JSON file");
  sim_cmd->add_option("--script", sim.script, "Text file, one command per line; '> reply' answers a pending plan")
      ->required();
  sim_cmd->add_option("--data-dir", sim.data_dir, "Directory for the session log and snapshots");
  sim_cmd->add_option("--fixtures", sim.fixtures, "Fixture corpus for the mock client");
  sim_cmd->add_option("--language", sim.language, "Pin the session language");
  sim_cmd->add_flag("--live-llm", sim.live_llm, "Use the configured LLM endpoint (BABELBOT_LLM_*)");
  sim_cmd->add_flag("!--no-auto-approve", sim.auto_approve, "Leave pending plans for '> reply' lines");

  auto *replay_cmd = app.add_subcommand("replay", "Compute the metrics report from a session log");
  std::string replay_log, replay_csv, replay_json;
  replay_cmd->add_option("--log", replay_log, "Session JSONL log")->required();
  replay_cmd->add_option("--report", replay_csv, "CSV output (stdout when omitted)");
  replay_cmd->add_option("--json", replay_json, "Also write the report as JSON");

  auto *bench_cmd = app.add_subcommand("bench", "Run the fixture benchmark and write its report");
  BenchArgs ba;
  bench_cmd->add_option("--fixtures", ba.fixtures, "Fixture corpus (JSONL)");
  bench_cmd->add_flag("--mock-llm", ba.mock, "Use the deterministic mock client (required)");
  bench_cmd->add_option("--data-dir", ba.data_dir, "Directory for the benchmark log; an existing log is resumed");
  bench_cmd->add_option("--log-dir", ba.data_dir, "Alias of --data-dir");
  bench_cmd->add_option("--report", ba.report, "CSV output (stdout when omitted)");
  bench_cmd->add_option("--json", ba.json_out, "Also write the report as JSON");
  bench_cmd->add_option("--map", ba.map, "Bundled map name");
  bench_cmd->add_option("--pace-ms", ba.pace_ms, "Sleep after each fixture")->check(CLI::NonNegativeNumber);
  bench_cmd->add_flag("--quiet", ba.quiet, "No progress output");

  auto *qc_cmd = app.add_subcommand("translate-qc", "BLEU/TER/PER/VeMatch per language for a translation set");
  std::string qc_dataset, qc_out;
  qc_cmd->add_option("--dataset", qc_dataset, "JSONL with source, lang, hyp, ref")->required();
  qc_cmd->add_option("--out", qc_out, "CSV output (stdout when omitted)");

  auto *profile = app.add_subcommand("langid-profile", "Build trigram profiles from plain-text corpora");
  std::string corpus_dir = (kData / "langid" / "corpus").string();
  std::string profile_out = (kData / "profiles").string();
  std::size_t max_entries = 2000;
  profile->add_option("--corpus", corpus_dir, "Directory of <code>.txt files");
  profile->add_option("--out", profile_out, "Output directory for <code>.tsv profiles");
  profile->add_option("--max-entries", max_entries, "Keep the most frequent N trigrams");

  CLI11_PARSE(app, argc, argv);
  try {
    if (serve_cmd->parsed()) {
      return serve(sa);
    }
    if (sim_cmd->parsed()) {
      return simulate(sim);
    }
    if (replay_cmd->parsed()) {
      return replay(replay_log, replay_csv, replay_json);
    }
    if (bench_cmd->parsed()) {
      return run_bench(ba);
    }
    if (qc_cmd->parsed()) {
      return translate_qc(qc_dataset, qc_out);
    }
    if (profile->parsed()) {
      return build_profiles(corpus_dir, profile_out, max_entries);
    }
  } catch (const Error &e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
