// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include "babelbot/bench.hpp"
#include "babelbot/error.hpp"
#include "babelbot/exec.hpp"
#include "babelbot/gateway.hpp"
#include "babelbot/metrics.hpp"
#include "babelbot/perception.hpp"
#include "babelbot/sim.hpp"
#include "oracle_tables.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cctype>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

using namespace babelbot;
namespace fs = std::filesystem;
using testing_support::data_dir;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

/// Collects failed expectations; the first few end up in the detail line.
class Checker {
public:
  void expect(bool ok, const std::string &what) {
    ++checks_;
    if (!ok) {
      if (failures_.size() < 3) {
        failures_.push_back(what);
      }
      ++failed_;
    }
  }
  [[nodiscard]] Outcome done(const std::string &summary) const {
    if (failed_ == 0) {
      return {true, summary + " (" + std::to_string(checks_) + " checks)"};
    }
    std::string d = std::to_string(failed_) + "/" + std::to_string(checks_) + " checks failed:";
    for (const auto &f : failures_) {
      d += " [" + f + "]";
    }
    return {false, d};
  }

private:
  std::size_t checks_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

fs::path scratch(const std::string &name) {
  const auto dir = fs::temp_directory_path() / ("bb_accept_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const perception::SynonymTable &synonyms() {
  static const auto t = perception::SynonymTable::load(data_dir() / "synonyms.json");
  return t;
}

const exec::ResponseCatalog &responses() {
  static const auto c = exec::ResponseCatalog::load_directory(data_dir() / "responses");
  return c;
}

sim::OccupancyGrid open_room() {
  sim::OccupancyGrid g(200, 200, 0.1);
  for (int i = 0; i < 200; ++i) {
    g.set_occupied({i, 0}, true);
    g.set_occupied({i, 199}, true);
    g.set_occupied({0, i}, true);
    g.set_occupied({199, i}, true);
  }
  return g;
}

// ---------------------------------------------------------------------------

Outcome mock_end_to_end() {
  const auto fixtures = data_dir() / "fixtures" / "corpus.jsonl";
  const auto corpus = engine::FixtureCorpus::load_jsonl(fixtures);
  std::map<std::string, int> per_lang;
  std::set<std::string> categories;
  for (const auto &r : corpus.records()) {
    ++per_lang[r.lang];
    categories.insert(r.category);
  }
  Checker c;
  c.expect(per_lang.size() >= 10, "fewer than 10 languages");
  for (const auto &[lang, n] : per_lang) {
    c.expect(n >= 20, lang + " has " + std::to_string(n) + " fixtures");
  }
  for (const char *cat : {"G_n", "W_c", "Q_i", "O_n", "C_r"}) {
    c.expect(categories.count(cat) == 1, std::string("no ") + cat + " fixtures");
  }

  bench::BenchOptions opt;
  opt.fixtures = fixtures;
  opt.resources_dir = data_dir();
  opt.data_dir = scratch("e2e");
  const auto r = bench::run_benchmark(opt);
  const auto &all = r.report.overall;
  c.expect(all.n == corpus.records().size(), "replayed " + std::to_string(all.n) + " records");
  c.expect(all.ipa == 1.0, "IPA " + fmt(all.ipa));
  c.expect(all.tsr >= 0.95, "TSR " + fmt(all.tsr));
  c.expect(r.wall_s < 60.0, "took " + fmt(r.wall_s) + " s");
  fs::remove_all(opt.data_dir);
  return c.done(std::to_string(per_lang.size()) + " languages x " + std::to_string(all.n / per_lang.size()) +
                " instructions, IPA " + fmt(all.ipa) + ", TSR " + fmt(all.tsr) + ", " + fmt(r.wall_s, 3) + " s");
}

Outcome confirmation_gate() {
  const auto res = gateway::Resources::load(data_dir(), data_dir() / "fixtures" / "corpus.jsonl");
  gateway::GatewayConfig cfg;
  cfg.resources_dir = data_dir();
  cfg.data_dir = scratch("gate");
  cfg.async_execution = false;
  cfg.realtime_factor = 0.0;
  gateway::ManualClock clock(1'000'000);
  engine::MockLanguageModelClient client(*res.fixtures);
  gateway::SessionManager manager(cfg, res, client, clock);
  const auto id = manager.create_session();

  std::mutex mu;
  std::vector<std::string> events;
  manager.subscribe(id, [&](const gateway::Event &e) {
    std::lock_guard lock(mu);
    events.push_back(e.type);
  });
  const auto motion_events = [&] {
    std::lock_guard lock(mu);
    return std::count_if(events.begin(), events.end(),
                         [](const std::string &t) { return t == "telemetry" || t == "action"; });
  };

  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> steps(2, 4), kind(0, 2), deg(10, 170);
  std::uniform_real_distribution<double> dist(0.1, 0.8), speed(0.2, 0.5);
  const char *positives[] = {"yes", "go ahead", "yes, please proceed", "ok, do it"};
  const char *negatives[] = {"no", "cancel", "no, don't do it", "stop, cancel that"};
  Checker c;
  int approved = 0, rejected = 0;
  for (int i = 0; i < 100; ++i) {
    manager.reset_world(id, static_cast<std::uint64_t>(i + 1));
    std::ostringstream cmd;
    cmd.precision(2);
    const int n = steps(rng);
    for (int k = 0; k < n; ++k) {
      if (k > 0) {
        cmd << " and then ";
      }
      switch (kind(rng)) {
      case 0:
        cmd << "move forward " << std::fixed << dist(rng) << " m at " << speed(rng) << " m/s";
        break;
      case 1:
        cmd << "move backward " << std::fixed << dist(rng) << " m";
        break;
      default:
        cmd << "turn " << (rng() % 2 ? "left " : "right ") << deg(rng) << " degrees";
      }
    }
    std::string text = cmd.str() + ".";
    text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    const std::string label = "plan " + std::to_string(i);

    const auto before = manager.state(id);
    const auto motion0 = motion_events();
    const auto r = manager.submit_command(id, text);
    c.expect(r.needs_confirmation && r.plan.size() == static_cast<std::size_t>(n), label + " not parked: " + text);
    if (!r.needs_confirmation) {
      continue;
    }
    c.expect(!r.trace, label + " ran before consent");
    if (i % 5 == 0) {
      const auto again = manager.confirm(id, "the weather is lovely today");
      c.expect(again.reprompt && !again.executed, label + " indeterminate reply was not a reprompt");
    }
    const auto waiting = manager.state(id);
    c.expect(motion_events() == motion0, label + " emitted motion before consent");
    c.expect(waiting["pose"] == before["pose"] && waiting["sim_time"] == before["sim_time"],
             label + " moved before consent");

    const bool approve = i % 2 == 0;
    const auto out = manager.confirm(id, approve ? positives[i / 2 % 4] : negatives[i / 2 % 4]);
    c.expect(out.executed == approve, label + " confirmation misread");
    c.expect(out.trace.has_value(), label + " no trace");
    if (!out.trace) {
      continue;
    }
    if (approve) {
      ++approved;
      c.expect(out.trace->twist_count > 0, label + " approved but no twists");
    } else {
      ++rejected;
      const auto after = manager.state(id);
      c.expect(out.trace->twist_count == 0 && !out.trace->first_output_at, label + " rejected plan emitted output");
      c.expect(motion_events() == motion0, label + " rejected plan emitted motion events");
      c.expect(after["pose"] == before["pose"], label + " rejected plan moved the robot");
      for (const auto &a : out.trace->per_action) {
        c.expect(a.status == exec::ActionStatus::Skipped, label + " rejected action not skipped");
      }
    }
  }
  fs::remove_all(cfg.data_dir);
  return c.done("100 plans, " + std::to_string(approved) + " approved, " + std::to_string(rejected) +
                " rejected with empty traces");
}

Outcome softmax_energy_reweight() {
  using namespace perception;
  Checker c;
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> s(-1.0, 1.0), shift(-50.0, 50.0), e(0.0, 5.0);
  double worst_norm = 0.0, worst_shift = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 8);
    std::vector<double> scores(n), eta(n);
    for (std::size_t j = 0; j < n; ++j) {
      scores[j] = s(rng);
      eta[j] = e(rng);
    }
    const auto p = class_distribution(scores, 0.07);
    worst_norm = std::max(worst_norm, std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0));
    auto shifted = scores;
    const double k = shift(rng);
    for (auto &x : shifted) {
      x += k;
    }
    const auto q = class_distribution(shifted, 0.07);
    for (std::size_t j = 0; j < n; ++j) {
      worst_shift = std::max(worst_shift, std::abs(p[j] - q[j]));
    }
    const auto w = reweight_degradation(p, eta, 1.0);
    worst_norm = std::max(worst_norm, std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0));
    c.expect(reweight_degradation(p, std::vector<double>(n, e(rng)), 1.0) == p,
             "constant eta changed the distribution");
  }
  c.expect(worst_norm <= 1e-12, "normalization error " + fmt(worst_norm));
  c.expect(worst_shift <= 1e-9, "shift error " + fmt(worst_shift));
  const double two = class_distribution({0.5, 0.3}, 0.07)[0];
  c.expect(std::abs(two - oracle::kSoftmaxTwoClass) <= 1e-9, "S=[0.5,0.3] gives " + fmt(two, 17));
  c.expect(std::abs(energy_score({0.37}, 0.07) + 0.37) <= 1e-12, "single-score energy");
  return c.done("max |sum-1| " + fmt(worst_norm, 3) + ", max shift drift " + fmt(worst_shift, 3));
}

Outcome argmax_matches_brute_force() {
  using namespace perception;
  const PerceptionConfig cfg;
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> ncand(1, 8), nlab(1, 5), id(1, 100000);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Checker c;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<TargetCandidate> cands;
    std::vector<std::vector<double>> sims;
    std::map<std::string, double> table;
    std::set<int> used;
    const int n = ncand(rng);
    for (int i = 0; i < n; ++i) {
      int tid = id(rng);
      while (!used.insert(tid).second) {
        tid = id(rng);
      }
      TargetCandidate cand{tid, {}, {}};
      std::vector<double> row;
      for (int j = 0, m = nlab(rng); j < m; ++j) {
        const auto label = "c" + std::to_string(i) + "l" + std::to_string(j);
        cand.labels.push_back(label);
        cand.p_prime.push_back(1e-6 + u(rng));
        row.push_back(u(rng));
        table[label] = row.back();
      }
      cands.push_back(std::move(cand));
      sims.push_back(std::move(row));
    }
    const auto got = select_target(cands, "", cfg, [&](const std::string &l, std::string_view) { return table[l]; });
    const auto want = oracle::brute_force_target(cands, sims, cfg);
    c.expect(got.track_id == want.first && got.label == want.second, "trial " + std::to_string(trial));
  }
  return c.done("1000 random candidate sets");
}

Outcome kinematics() {
  Checker c;
  auto ctx = exec::ExecutionContext{};
  ctx.responses = &responses();
  ctx.language = "en";

  exec::World world(open_room(), synonyms());
  world.simulator.reset({10, 10, 0.3});
  auto circle = engine::parse_action_lines({"Action 1: Move in a circle of radius 1 m at 1 m/s."});
  const auto t = exec::execute_plan(circle, exec::Approval::Approved, world, ctx);
  const double closure = std::hypot(t.final_pose.x - 10, t.final_pose.y - 10);
  c.expect(closure < 1e-6, "circle closure " + fmt(closure));

  std::mt19937 rng(44);
  std::uniform_real_distribution<double> coord(1.0, 19.0), yaw(-std::numbers::pi, std::numbers::pi);
  int reached = 0;
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    world.simulator.reset({coord(rng), coord(rng), yaw(rng)});
    const double gx = coord(rng), gy = coord(rng);
    engine::ActionPlan plan;
    plan.actions = {engine::NavigateToCoords{gx, gy, 0, 1.0}};
    const auto trace = exec::execute_plan(plan, exec::Approval::Approved, world, ctx);
    const double miss = std::hypot(trace.final_pose.x - gx, trace.final_pose.y - gy);
    worst = std::max(worst, miss);
    const bool ok = trace.s_n == 1 && exec::goal_reached(trace.final_pose, {{gx, gy}, 0.2});
    reached += ok ? 1 : 0;
    c.expect(ok, "goal " + std::to_string(i) + " missed by " + fmt(miss));
  }
  return c.done("circle closure " + fmt(closure, 3) + " m, " + std::to_string(reached) +
                "/50 goals, worst miss " + fmt(worst, 3) + " m");
}

Outcome astar_equals_dijkstra() {
  std::mt19937 rng(8675309);
  std::bernoulli_distribution wall(0.3);
  std::uniform_int_distribution<int> coord(0, 49);
  Checker c;
  int paths = 0;
  for (int trial = 0; trial < 100; ++trial) {
    sim::OccupancyGrid g(50, 50, 1.0);
    for (int y = 0; y < 50; ++y) {
      for (int x = 0; x < 50; ++x) {
        g.set_occupied({x, y}, wall(rng));
      }
    }
    const sim::Cell s{coord(rng), coord(rng)}, goal{coord(rng), coord(rng)};
    g.set_occupied(s, false);
    g.set_occupied(goal, false);
    const auto want = oracle::dijkstra_counts(g, s, goal);
    try {
      const auto got = sim::astar(g, s, goal);
      ++paths;
      c.expect(want.first >= 0 && got.straight_moves == want.first && got.diagonal_moves == want.second,
               "grid " + std::to_string(trial) + " cost differs");
    } catch (const Error &e) {
      c.expect(e.code() == ErrorCode::NoPath && want.first < 0, "grid " + std::to_string(trial) + ": " + e.what());
    }
  }
  return c.done("100 grids 50x50, " + std::to_string(paths) + " with a path");
}

Outcome kalman() {
  using namespace perception;
  Checker c;
  const Eigen::Vector3d p0(1.0, 2.0, 0.5), v(0.5, -0.3, 0.1);
  const double dt = 0.05;
  auto t = new_track(1, "person", p0, 0.0);
  for (int k = 1; k <= 20; ++k) {
    t = track_update(t, p0 + v * (k * dt), dt);
  }
  const double err = (t.position() - (p0 + v * (20 * dt))).norm();
  c.expect(err < 1e-6, "constant-velocity error " + fmt(err));

  const auto &k = oracle::kKalmanTwoStep;
  auto two = new_track(1, "x", k.first, 0.0);
  two = track_update(two, k.second, 0.1);
  two = track_update(two, k.third, 0.2);
  double worst = 0.0;
  for (int i = 0; i < 6; ++i) {
    worst = std::max(worst, std::abs(two.state(i) - k.state[i]));
  }
  for (int i = 0; i < 3; ++i) {
    worst = std::max(worst, std::abs(two.covariance(i, i) - k.position_variance));
    worst = std::max(worst, std::abs(two.covariance(i + 3, i + 3) - k.velocity_variance));
    worst = std::max(worst, std::abs(two.covariance(i, i + 3) - k.cross_covariance));
  }
  c.expect(worst <= 1e-9, "two-step deviation " + fmt(worst));
  return c.done("CV error " + fmt(err, 3) + " m, two-step deviation " + fmt(worst, 3));
}

std::vector<std::string> words(const std::string &s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) {
    out.push_back(w);
  }
  return out;
}

Outcome metrics_oracles() {
  using namespace metrics;
  Checker c;
  double worst_bleu = 0.0;
  for (std::size_t i = 0; i < std::size(oracle::kPairs); ++i) {
    const auto &p = oracle::kPairs[i];
    worst_bleu = std::max(worst_bleu, std::abs(bleu(words(p.ref), words(p.hyp)) - oracle::kBleuOracle[i]));
  }
  c.expect(std::size(oracle::kPairs) == 20, "BLEU suite is not 20 pairs");
  c.expect(worst_bleu <= 1e-6, "BLEU deviation " + fmt(worst_bleu));

  int ter_cases = 0;
  for (const auto &tc : oracle::kTerOracle) {
    const auto ref = words(tc.ref), hyp = words(tc.hyp);
    if (ref.size() > 8 || hyp.size() > 8) {
      continue;
    }
    ++ter_cases;
    const auto r = ter(ref, hyp);
    const int brute = oracle::ter_exhaustive_edits(ref, hyp);
    c.expect(brute == tc.edits, std::string("frozen TER oracle disagrees with brute force: ") + tc.hyp);
    c.expect(r.shifts + r.edit_distance == brute, std::string("TER: ") + tc.hyp);
  }

  const std::vector<Param> a{{2, Unit::Meter}, {0.2, Unit::MeterPerSecond}};
  c.expect(per(std::vector<Param>{}, std::vector<Param>{}) == 0.0, "PER both empty");
  c.expect(per(a, std::vector<Param>{}) == 1.0 && per(std::vector<Param>{}, a) == 1.0, "PER one empty");
  c.expect(per(a, std::vector<Param>{{2, Unit::Meter}, {0.3, Unit::MeterPerSecond}}) == 0.5, "PER mismatch fraction");

  c.expect(composite_score(0.5, 1.0) == 0.8, "IPA composite 0.4*0.5+0.6*1");
  c.expect(!parsed_correctly(0.5, 1.0), "0.8 counted as correct");
  c.expect(parsed_correctly(1.0, 1.0), "1.0 counted as incorrect");
  return c.done("BLEU max deviation " + fmt(worst_bleu, 3) + " on 20 pairs, TER " + std::to_string(ter_cases) +
                " pairs, PER 3 branches, IPA 0.8 < 0.9");
}

Outcome art_bookkeeping() {
  using namespace metrics;
  Checker c;
  std::mt19937 rng(31);
  std::uniform_int_distribution<std::int64_t> gap(150, 9000), start(0, 1'000'000'000);
  std::ostringstream log;
  std::vector<InteractionRecord> direct;
  std::int64_t total = 0;
  const int n = 500;
  for (int i = 0; i < n; ++i) {
    InteractionRecord r;
    r.text = "t";
    r.lang = i % 2 ? "en" : "fr";
    r.t_ins_ms = 1'700'000'000'000 + start(rng);
    const auto g = gap(rng);
    r.t_res_ms = r.t_ins_ms + g;
    r.success = 1;
    total += g;
    direct.push_back(r);
    auto j = to_json(r);
    j["type"] = "interaction";
    log << j.dump() << '\n';
    if (i % 7 == 0) {
      log << R"({"type":"trace","session":"s"})" << '\n';
    }
  }
  const double want_s = static_cast<double>(total) / n / 1000.0;
  const double from_records = art(direct);
  const auto replayed = parse_interactions(log.str());
  const double from_log = art(replayed);
  c.expect(replayed.size() == static_cast<std::size_t>(n), "replayed " + std::to_string(replayed.size()));
  c.expect(std::abs(from_records - want_s) * 1000.0 < 1.0, "ART " + fmt(from_records, 12) + " vs " + fmt(want_s, 12));
  c.expect(std::abs(from_log - want_s) * 1000.0 < 1.0, "replayed ART " + fmt(from_log, 12));

  const std::vector<InteractionRecord> pair{direct[0], direct[1]};
  auto fixed = pair;
  fixed[0].t_res_ms = fixed[0].t_ins_ms + 2100;
  fixed[1].t_res_ms = fixed[1].t_ins_ms + 2300;
  c.expect(std::abs(art(fixed) - 2.2) < 1e-3, "2.1 s and 2.3 s do not average to 2.2 s");
  return c.done(std::to_string(n) + " records, ART " + fmt(from_log, 9) + " s vs exact " + fmt(want_s, 9) + " s");
}

// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string> &args, const fs::path &stderr_file, pid_t *child = nullptr) {
  const pid_t pid = ::fork();
  if (pid < 0) {
    fail(ErrorCode::IoError, "fork failed");
  }
  if (pid == 0) {
    std::FILE *err = std::freopen(stderr_file.c_str(), "a", stderr);
    (void)err;
    std::vector<char *> argv;
    for (const auto &a : args) {
      argv.push_back(const_cast<char *>(a.c_str()));
    }
    argv.push_back(nullptr);
    ::execv(argv[0], argv.data());
    std::_Exit(127);
  }
  if (child) {
    *child = pid;
    return 0;
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::size_t count_lines(const fs::path &file) {
  const auto content = testing_support::read_file(file);
  return static_cast<std::size_t>(std::count(content.begin(), content.end(), '\n'));
}

Outcome durability() {
  const std::string cli = BABELBOT_CLI;
  const auto fixtures = (data_dir() / "fixtures" / "corpus.jsonl").string();
  const auto root = scratch("durable");
  const auto errlog = root / "stderr.txt";
  Checker c;

  const auto clean = root / "clean";
  const int rc = run_cli({cli, "bench", "--mock-llm", "--quiet", "--fixtures", fixtures, "--data-dir", clean.string(),
                          "--report", (root / "clean.csv").string()},
                         errlog);
  c.expect(rc == 0, "uninterrupted bench exited " + std::to_string(rc));

  const auto killed = root / "killed";
  const auto log = killed / "bench.jsonl";
  pid_t pid = 0;
  run_cli({cli, "bench", "--mock-llm", "--quiet", "--pace-ms", "15", "--fixtures", fixtures, "--data-dir",
           killed.string(), "--report", (root / "never.csv").string()},
          errlog, &pid);
  // let a fair share of fixtures land, then kill without warning
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
  std::size_t at_kill = 0;
  while (std::chrono::steady_clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    std::error_code ec;
    if (fs::exists(log, ec) && (at_kill = count_lines(log)) >= 120) {
      break;
    }
  }
  ::kill(pid, SIGKILL);
  int status = 0;
  ::waitpid(pid, &status, 0);
  c.expect(WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL, "bench finished before it could be killed");
  c.expect(!fs::exists(root / "never.csv"), "killed run wrote a report");

  const int rc2 = run_cli({cli, "bench", "--mock-llm", "--quiet", "--fixtures", fixtures, "--data-dir",
                           killed.string(), "--report", (root / "resumed.csv").string()},
                          errlog);
  c.expect(rc2 == 0, "resumed bench exited " + std::to_string(rc2));
  const int rc3 = run_cli({cli, "replay", "--log", log.string(), "--report", (root / "replayed.csv").string()}, errlog);
  c.expect(rc3 == 0, "replay exited " + std::to_string(rc3));

  const auto a = testing_support::read_file(root / "clean.csv");
  const auto b = testing_support::read_file(root / "resumed.csv");
  const auto r = testing_support::read_file(root / "replayed.csv");
  c.expect(!a.empty(), "empty clean report");
  c.expect(a == b, "resumed report differs from the uninterrupted one");
  c.expect(a == r, "replayed report differs from the uninterrupted one");
  const auto out = c.done("killed after " + std::to_string(at_kill) + " log lines, resumed and replayed CSV byte-equal (" +
                          std::to_string(a.size()) + " bytes)");
  if (out.pass) {
    fs::remove_all(root);
  }
  return out;
}

} // namespace

int main() {
  const std::pair<const char *, Outcome (*)()> criteria[] = {
      {"mock-end-to-end", mock_end_to_end},
      {"confirmation-gate", confirmation_gate},
      {"softmax-energy-reweight", softmax_energy_reweight},
      {"target-argmax", argmax_matches_brute_force},
      {"kinematics", kinematics},
      {"astar-equals-dijkstra", astar_equals_dijkstra},
      {"kalman", kalman},
      {"metrics-oracles", metrics_oracles},
      {"art-bookkeeping", art_bookkeeping},
      {"durability", durability},
  };
  int failed = 0;
  for (const auto &[name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (std::size(criteria) - static_cast<std::size_t>(failed)) << "/" << std::size(criteria)
            << " acceptance criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
