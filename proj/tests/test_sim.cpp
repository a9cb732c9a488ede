#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "alcon/sim.hpp"

using namespace alcon;

namespace {

GridGeometry geom(int w, int h) { return {w, h, 0.1, {}}; }

std::size_t known_cells(const OccupancyGrid& g) {
  return static_cast<std::size_t>(
      std::count_if(g.data().begin(), g.data().end(), [](CellState s) { return s != CellState::Unknown; }));
}

// Integer level sum over every cell, normalized once.
double brute_reward(Point p, const ScoreMap& score, double radius, double scale) {
  long long sum = 0;
  for (int r = 0; r < score.height(); ++r)
    for (int c = 0; c < score.width(); ++c)
      if (squared_distance(score.geometry().cell_center({r, c}), p) <= radius * radius + kRadiusSlack)
        sum += score.at({r, c});
  return scale * (static_cast<double>(sum) / 255.0);
}

WorldParams small_world() {
  WorldParams p;
  p.canvas_width = p.canvas_height = 160;
  p.extent_min_m = 12.0;
  p.extent_max_m = 16.0;
  p.rooms_min = 2;
  p.rooms_max = 4;
  p.min_room_m = 3.0;
  return p;
}

bool path_clear(const OccupancyGrid& observed, Cell from, std::span<const Cell> path) {
  Cell prev = from;
  for (const Cell& c : path) {
    if (!move_allowed(observed, prev, c, true)) return false;
    prev = c;
  }
  return true;
}

}  // namespace

TEST_CASE("sense copies visible occupancy and scores, and is idempotent") {
  OccupancyGrid world(geom(60, 60), CellState::Free);
  for (int r = 0; r < 60; ++r) world.at({r, 40}) = CellState::Obstacle;
  ScoreMap latent(world.geometry(), 0);
  latent.at({30, 45}) = 255;  // behind the wall
  latent.at({30, 35}) = 200;  // in view
  RobotState s = RobotState::initial({3.05, 3.05, 0.0}, world.geometry());
  const std::size_t before = known_cells(s.observed);
  CHECK(before == 0);
  sense(s, world, latent, FovConfig{});
  CHECK(s.observed.at({30, 35}) == CellState::Free);
  CHECK(s.observed_score.at({30, 35}) == 200);
  CHECK(s.observed.at({30, 40}) == CellState::Obstacle);
  CHECK(s.observed.at({30, 45}) == CellState::Unknown);
  CHECK(s.observed_score.at({30, 45}) == 0);
  const auto obs = s.observed.data();
  const auto sc = s.observed_score.data();
  sense(s, world, latent, FovConfig{});
  CHECK(s.observed.data() == obs);
  CHECK(s.observed_score.data() == sc);
}

TEST_CASE("sense through a visibility cache equals direct sensing") {
  const OccupancyGrid world = gen_workspace(3, small_world());
  const ScoreMap latent(world.geometry(), 10);
  const auto cells = free_cells(world);
  VisibilityCache cache(world, FovConfig{});
  Rng rng(4);
  for (int i = 0; i < 40; ++i) {
    const Point p = world.geometry().cell_center(cells[uniform_index(rng, cells.size())]);
    const Pose pose{p.x, p.y, normalize_angle(uniform01(rng) * 7.0)};
    RobotState a = RobotState::initial(pose, world.geometry()), b = a;
    sense(a, world, latent, FovConfig{});
    sense(b, world, latent, FovConfig{}, &cache);
    sense(b, world, latent, FovConfig{}, &cache);
    CHECK(a.observed.data() == b.observed.data());
    CHECK(a.observed_score.data() == b.observed_score.data());
  }
  CHECK(cache.hits() == 40);
  CHECK(cache.misses() == 40);
  CHECK_FALSE(cache.serves(world, FovConfig{1.0, 40.0}));
}

TEST_CASE("scan_around restores the heading and sees all around") {
  OccupancyGrid world(geom(80, 80), CellState::Free);
  const ScoreMap latent(world.geometry(), 0);
  RobotState s = RobotState::initial({4.05, 4.05, 0.3}, world.geometry());
  sense(s, world, latent, FovConfig{});
  scan_around(s, world, latent, FovConfig{});
  CHECK(s.pose.heading == 0.3);
  CHECK(s.observed.at({40, 40 - 25}) == CellState::Free);
  CHECK(s.observed.at({40 - 25, 40}) == CellState::Free);
  CHECK(s.observed.at({40 + 25, 40}) == CellState::Free);
}

TEST_CASE("invalid pose is rejected by sense") {
  OccupancyGrid world(geom(10, 10), CellState::Obstacle);
  const ScoreMap latent(world.geometry(), 0);
  RobotState s = RobotState::initial({0.55, 0.55, 0.0}, world.geometry());
  CHECK_THROWS_AS(sense(s, world, latent, FovConfig{}), Error);
}

TEST_CASE("success is distance-only with an inclusive boundary") {
  RobotState s = RobotState::initial({0.0, 0.0, 0.0}, geom(4, 4));
  CHECK(check_success(s, {0.0, 0.0}));
  CHECK(check_success(s, {1.6, 0.0}));
  CHECK(check_success(s, {0.96, 1.28}));  // 3-4-5 scaled to 1.6
  CHECK_FALSE(check_success(s, {1.61, 0.0}));
}

TEST_CASE("reward_at: hand cases and brute-force enumeration") {
  ScoreMap zero(geom(50, 50), 0);
  CHECK(reward_at({2.5, 2.5}, zero) == 0.0);
  ScoreMap one = zero;
  one.at({25, 25}) = 255;
  CHECK(reward_at({2.5, 2.5}, one) == 0.001);
  CHECK(reward_at({0.05, 0.05}, one) == 0.0);  // more than 2 m away

  ScoreMap full(geom(60, 60), 0);
  stamp_disk(full, {3.0, 3.0}, 2.0, 255);
  const auto count = std::count(full.data().begin(), full.data().end(), std::uint8_t{255});
  CHECK(reward_at({3.0, 3.0}, full) == 0.001 * static_cast<double>(count));

  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const int w = 5 + static_cast<int>(uniform_index(rng, 60)), h = 5 + static_cast<int>(uniform_index(rng, 60));
    ScoreMap m(geom(w, h), 0);
    for (auto& v : m.data()) v = static_cast<std::uint8_t>(uniform_index(rng, 4) == 0 ? uniform_index(rng, 256) : 0);
    const Point p{uniform01(rng) * w * 0.1 * 1.2 - 0.3, uniform01(rng) * h * 0.1 * 1.2 - 0.3};
    CHECK(reward_at(p, m) == brute_reward(p, m, 2.0, 0.001));
  }
}

TEST_CASE("goto: identity and a straight corridor") {
  OccupancyGrid world(geom(30, 5), CellState::Obstacle);
  for (int c = 0; c < 30; ++c) world.at({2, c}) = CellState::Free;
  const ScoreMap latent(world.geometry(), 0);
  SimConfig cfg;
  RobotState s = RobotState::initial({0.25, 0.25, 0.0}, world.geometry());
  sense(s, world, latent, cfg.fov);
  auto r = goto_subgoal(s, {0.25, 0.25}, world, latent, 100, cfg);
  CHECK(r.reached);
  CHECK(r.moves == 0);
  CHECK(s.path_length == 0.0);

  r = goto_subgoal(s, {1.25, 0.25}, world, latent, 100, cfg);
  CHECK(r.reached);
  CHECK(r.moves == 10);
  CHECK(s.path_length == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.step_count == 10);
  CHECK(r.trace.size() == 11);

  RobotState t = RobotState::initial({0.25, 0.25, 0.0}, world.geometry());
  r = goto_subgoal(t, {2.85, 0.25}, world, latent, 4, cfg);
  CHECK_FALSE(r.reached);
  CHECK(r.moves == 4);
}

TEST_CASE("goto: subgoal with no path on the observed map throws") {
  OccupancyGrid world(geom(20, 20), CellState::Free);
  const ScoreMap latent(world.geometry(), 0);
  RobotState s = RobotState::initial({0.55, 0.55, 0.0}, world.geometry());
  for (int r = 0; r < 20; ++r) s.observed.at({r, 10}) = CellState::Obstacle;
  CHECK_THROWS_AS(goto_subgoal(s, {1.55, 0.55}, world, latent, 100, SimConfig{}), UnreachableError);
}

TEST_CASE("goto: a door closing mid-transit forces a detour that never crosses an observed obstacle") {
  // Two rooms joined by two doors; the robot heads for the near door, which
  // shuts while it is on the way.
  OccupancyGrid world(geom(60, 40), CellState::Free);
  for (int r = 0; r < 40; ++r) world.at({r, 30}) = CellState::Obstacle;
  for (int r = 18; r <= 21; ++r) world.at({r, 30}) = CellState::Free;  // near door
  for (int r = 35; r <= 38; ++r) world.at({r, 30}) = CellState::Free;  // far door
  const ScoreMap latent(world.geometry(), 0);
  SimConfig cfg;
  RobotState s = RobotState::initial({0.55, 2.0, 0.0}, world.geometry());
  sense(s, world, latent, cfg.fov);

  bool closed = false;
  int violations = 0;
  GotoHooks hooks;
  hooks.on_move = [&](const RobotState& st, std::span<const Cell> remaining) {
    const Cell here = world.geometry().world_to_cell(st.pose.position());
    if (world.at(here) == CellState::Obstacle) ++violations;
    if (!path_clear(st.observed, here, remaining)) ++violations;
    if (!closed && st.step_count == 5) {
      for (int r = 18; r <= 21; ++r) world.at({r, 30}) = CellState::Obstacle;
      closed = true;
    }
  };
  const auto res = goto_subgoal(s, {5.55, 2.0}, world, latent, 1000, cfg, std::nullopt, hooks);
  INFO("blocked=" << res.blocked << " moves=" << res.moves << " replans=" << res.replans << " at "
                   << s.pose.x << "," << s.pose.y);
  CHECK(closed);
  CHECK(violations == 0);
  CHECK(res.reached);
  CHECK(res.replans >= 1);
  // The detour goes through the far door.
  const bool via_far = std::any_of(res.trace.begin(), res.trace.end(), [](Point p) {
    return std::abs(p.x - 3.05) < 0.06 && p.y > 3.4;
  });
  CHECK(via_far);
}

TEST_CASE("episodes: immediate success, determinism, monotone knowledge, replayable length") {
  const OccupancyGrid world = gen_workspace(11, small_world());
  SimConfig cfg;
  cfg.step_budget = 12;
  cfg.S = 3;
  const RandomFrontierPlanner rf;
  const TfpPlanner tfp;

  SUBCASE("goal within reach of the start") {
    EpisodeSpec e = sample_episode(world, 2.0, 1);
    e.goal = e.start.position();
    const ScoreMap latent = gen_latent_scores(world, e.goal, CueParams{}, 1);
    const auto out = run_episode(e, latent, rf, cfg);
    CHECK(out.success);
    CHECK(out.path_length == 0.0);
    CHECK(out.steps == 0);
    CHECK(out.shortest_length > 0.0);
  }

  SUBCASE("sampled episodes") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const EpisodeSpec e = sample_episode(world, 5.0, seed, {6.0, 100});
      const ScoreMap latent = gen_latent_scores(world, e.goal, CueParams{}, seed);
      std::size_t known = 0;
      double length = 0.0;
      int bad = 0;
      EpisodeHooks hooks;
      hooks.go.on_move = [&](const RobotState& st, std::span<const Cell> remaining) {
        const std::size_t k = known_cells(st.observed);
        if (k < known || st.path_length < length) ++bad;
        known = k;
        length = st.path_length;
        const Cell here = world.geometry().world_to_cell(st.pose.position());
        if (world.at(here) == CellState::Obstacle || !path_clear(st.observed, here, remaining)) ++bad;
      };
      const Planner& planner = seed % 2 ? static_cast<const Planner&>(tfp) : rf;
      const auto a = run_episode(e, latent, planner, cfg, hooks);
      const auto b = run_episode(e, latent, planner, cfg);
      CHECK(bad == 0);
      CHECK(episode_log_jsonl(a.log) == episode_log_jsonl(b.log));
      CHECK(a.path_length == b.path_length);
      CHECK(a.steps <= cfg.step_budget);
      CHECK(a.shortest_length > 0.0);
      if (a.success) CHECK(a.shortest_length <= a.path_length + 1e-9);
      else CHECK(a.steps == cfg.step_budget);
      for (std::size_t i = 0; i < a.log.rounds.size(); ++i)
        CHECK(a.log.rounds[i].planner == (static_cast<int>(i) < cfg.S ? "rf" : planner.name()));
      CHECK(replay_path_length_error(a.log) <= 1e-9 * std::max(1.0, a.path_length));

      const EpisodeLog parsed = parse_episode_log(episode_log_jsonl(a.log));
      CHECK(episode_log_jsonl(parsed) == episode_log_jsonl(a.log));
    }
  }
}

TEST_CASE("episode log parse errors name the line") {
  CHECK_THROWS_WITH_AS(parse_episode_log("{\"step\":0}\n"), doctest::Contains("line 1"), Error);
  CHECK(parse_episode_log("\n\n").rounds.empty());
}

TEST_CASE("sim configuration is validated") {
  SimConfig cfg;
  cfg.step_budget = cfg.S;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.fov.angle_deg = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.max_moves_per_round = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
