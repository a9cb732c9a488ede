#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "alcon/eval.hpp"

using namespace alcon;

namespace {

EpisodeOutcome outcome(bool success, double p, double l) {
  EpisodeOutcome o;
  o.success = success;
  o.path_length = p;
  o.shortest_length = l;
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

BenchmarkConfig small_bench() {
  BenchmarkConfig cfg;
  cfg.episodes = 3;
  cfg.planners = {"rf", "tfp"};
  cfg.seed = 21;
  cfg.min_separation_m = 4.0;
  cfg.world.canvas_width = cfg.world.canvas_height = 160;
  cfg.world.extent_min_m = 12.0;
  cfg.world.extent_max_m = 16.0;
  cfg.world.rooms_min = 2;
  cfg.world.rooms_max = 4;
  cfg.world.min_room_m = 3.0;
  cfg.sim.step_budget = 10;
  cfg.sim.S = 2;
  return cfg;
}

}  // namespace

TEST_CASE("SPL hand cases") {
  const EpisodeOutcome exact[] = {outcome(true, 7.0, 7.0)};
  CHECK(spl(exact) == 1.0);
  const EpisodeOutcome half[] = {outcome(true, 20.0, 10.0)};
  CHECK(spl(half) == 0.5);
  const EpisodeOutcome mix[] = {outcome(true, 4.0, 4.0), outcome(false, 9.0, 3.0)};
  CHECK(spl(mix) == 0.5);
  // A path shorter than the oracle (numerical slack) still counts as 1.
  const EpisodeOutcome shorter[] = {outcome(true, 2.0, 3.0)};
  CHECK(spl(shorter) == 1.0);
  CHECK_THROWS_AS(spl(std::span<const EpisodeOutcome>{}), Error);
  const EpisodeOutcome zero[] = {outcome(true, 1.0, 0.0)};
  CHECK_THROWS_AS(spl(zero), Error);
}

TEST_CASE("SPL properties: range, order invariance, failures never help") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EpisodeOutcome> v;
    const int n = 1 + static_cast<int>(uniform_index(rng, 20));
    for (int i = 0; i < n; ++i)
      v.push_back(outcome(uniform01(rng) < 0.5, uniform01(rng) * 50, 0.1 + uniform01(rng) * 30));
    const double s = spl(v);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
    std::vector<EpisodeOutcome> w = v;
    std::shuffle(w.begin(), w.end(), rng);
    CHECK(spl(w) == doctest::Approx(s).epsilon(1e-12));
    w.push_back(outcome(false, 10.0, 5.0));
    CHECK(spl(w) <= s);
  }
}

TEST_CASE("planner factory") {
  CHECK(make_planner("rf", nullptr)->name() == "rf");
  CHECK(make_planner("tfp", nullptr)->name() == "tfp");
  CHECK_THROWS_WITH_AS(make_planner("ours", nullptr), doctest::Contains("trained models"), Error);
  CHECK_THROWS_AS(make_planner("astar", nullptr), ConfigError);
  CHECK(is_learned_planner("alc"));
  CHECK_FALSE(is_learned_planner("tfp"));
}

TEST_CASE("benchmark: paired episodes, determinism, thread independence, export") {
  BenchmarkConfig cfg = small_bench();
  const BenchmarkReport a = run_benchmark(cfg, nullptr);
  REQUIRE(a.records.size() == 6);
  REQUIRE(a.summaries.size() == 2);
  for (int e = 0; e < 3; ++e) {
    const auto& r0 = a.records[static_cast<std::size_t>(2 * e)];
    const auto& r1 = a.records[static_cast<std::size_t>(2 * e + 1)];
    CHECK(r0.planner == "rf");
    CHECK(r1.planner == "tfp");
    CHECK(r0.seed == r1.seed);
    CHECK(r0.K == r1.K);
    CHECK(r0.outcome.shortest_length == r1.outcome.shortest_length);
  }
  for (const auto& s : a.summaries) {
    CHECK(s.spl >= 0.0);
    CHECK(s.spl <= 1.0);
    CHECK(s.episodes == 3);
  }

  const BenchmarkEpisode e0 = make_benchmark_episode(cfg, 0), e0b = make_benchmark_episode(cfg, 0);
  CHECK(e0.spec.workspace.data() == e0b.spec.workspace.data());
  CHECK(e0.latent.data() == e0b.latent.data());
  CHECK(e0.spec.goal == e0b.spec.goal);

  cfg.threads = 2;
  cfg.write_logs = true;
  const BenchmarkReport b = run_benchmark(cfg, nullptr);
  CHECK(summary_csv(b) == summary_csv(a));
  CHECK(episodes_jsonl(b) == episodes_jsonl(a));

  // RF against itself under the same seeds gives the same SPL.
  BenchmarkConfig rf_only = small_bench();
  rf_only.planners = {"rf"};
  CHECK(run_benchmark(rf_only, nullptr).summary("rf").spl == a.summary("rf").spl);

  const auto dir = std::filesystem::temp_directory_path() / "alcon_test_eval_export";
  std::filesystem::remove_all(dir);
  export_report(b, dir);
  const std::string csv = slurp(dir / "summary.csv");
  CHECK(csv.rfind("planner,spl,success_rate,mean_path_m,episodes\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  const std::string jsonl = slurp(dir / "episodes.jsonl");
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 6);
  CHECK(std::filesystem::is_regular_file(dir / "logs" / "tfp_0002.jsonl"));
  const std::string svg = slurp(dir / "spl.svg");
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\"") != std::string::npos);
  CHECK(svg.size() >= 7);
  CHECK(svg.substr(svg.size() - 7) == "</svg>\n");
  CHECK(std::count(svg.begin(), svg.end(), '<') == std::count(svg.begin(), svg.end(), '>'));
  export_report(b, dir);
  CHECK(slurp(dir / "summary.csv") == csv);
  CHECK(slurp(dir / "spl.svg") == svg);
}

TEST_CASE("benchmark refuses learned planners without models before running") {
  BenchmarkConfig cfg = small_bench();
  cfg.planners = {"rf", "ours"};
  int progress_calls = 0;
  CHECK_THROWS_AS(run_benchmark(cfg, nullptr, [&](int, int) { ++progress_calls; }), Error);
  CHECK(progress_calls == 0);
}

TEST_CASE("benchmark configuration is validated") {
  BenchmarkConfig cfg = small_bench();
  cfg.episodes = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_bench();
  cfg.planners = {"rf", "dstar"};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_bench();
  cfg.K_values = {};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_bench();
  cfg.threads = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
