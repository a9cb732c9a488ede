#include "alcon/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <json.hpp>

namespace alcon {

void SimConfig::validate() const {
  if (fov.radius_m < 0.0) throw ConfigError("fov.radius_m", "must be non-negative");
  if (!(fov.angle_deg > 0.0) || fov.angle_deg > 360.0) throw ConfigError("fov.angle_deg", "must lie in (0, 360]");
  if (success_radius_m < 0.0) throw ConfigError("sim.success_radius_m", "must be non-negative");
  if (S < 0) throw ConfigError("sim.S", "must be non-negative");
  if (step_budget <= S) throw ConfigError("sim.step_budget", "must exceed sim.S");
  if (max_moves_per_round <= 0) throw ConfigError("sim.max_moves_per_round", "must be positive");
  if (reward_radius_m < 0.0) throw ConfigError("sim.reward_radius_m", "must be non-negative");
}

RobotState RobotState::initial(const Pose& start, const GridGeometry& geometry) {
  RobotState s;
  s.pose = start;
  s.pose.heading = normalize_angle(start.heading);
  s.observed = OccupancyGrid(geometry, CellState::Unknown);
  s.observed_score = ScoreMap(geometry, 0);
  return s;
}

VisibilityCache::VisibilityCache(const OccupancyGrid& world, const FovConfig& fov, std::size_t max_cells)
    : world_(world), fov_(fov), max_cells_(max_cells) {}

std::size_t VisibilityCache::KeyHash::operator()(const Key& k) const {
  return static_cast<std::size_t>(mix_seed(k.x ^ mix_seed(k.y ^ mix_seed(k.heading))));
}

std::span<const std::uint32_t> VisibilityCache::visible(const Pose& pose) {
  const Key key{std::bit_cast<std::uint64_t>(pose.x), std::bit_cast<std::uint64_t>(pose.y),
                std::bit_cast<std::uint64_t>(pose.heading)};
  if (const auto it = entries_.find(key); it != entries_.end()) {
    ++hits_;
    return it->second;
  }
  ++misses_;
  const auto cells = sector_visible_cells(world_, pose, fov_);
  if (stored_ + cells.size() > max_cells_) {
    entries_.clear();
    stored_ = 0;
  }
  std::vector<std::uint32_t> idx;
  idx.reserve(cells.size());
  for (const Cell& c : cells) idx.push_back(static_cast<std::uint32_t>(world_.geometry().index(c)));
  stored_ += idx.size();
  return entries_.emplace(key, std::move(idx)).first->second;
}

namespace {

// Newly observed obstacles are appended to `blocked` so that an incremental
// planner can repair its search; no other observation changes traversability.
void sense_tracked(RobotState& state, const OccupancyGrid& world, const ScoreMap& latent_score, const FovConfig& fov,
                   VisibilityCache* cache, std::vector<std::size_t>* blocked) {
  const auto copy = [&](std::size_t i) {
    if (blocked && world[i] == CellState::Obstacle && state.observed[i] != CellState::Obstacle) blocked->push_back(i);
    state.observed[i] = world[i];
    state.observed_score[i] = std::max(state.observed_score[i], latent_score[i]);
  };
  if (cache && cache->serves(world, fov)) {
    for (const std::uint32_t i : cache->visible(state.pose)) copy(i);
    return;
  }
  for (const Cell& c : sector_visible_cells(world, state.pose, fov)) copy(world.geometry().index(c));
}

}  // namespace

void sense(RobotState& state, const OccupancyGrid& world, const ScoreMap& latent_score, const FovConfig& fov,
           VisibilityCache* cache) {
  sense_tracked(state, world, latent_score, fov, cache, nullptr);
}

void scan_around(RobotState& state, const OccupancyGrid& world, const ScoreMap& latent_score, const FovConfig& fov,
                 VisibilityCache* cache) {
  const double heading = state.pose.heading;
  const int turns = static_cast<int>(std::ceil(360.0 / fov.angle_deg - 1e-9));
  for (int i = 1; i < turns; ++i) {
    state.pose.heading = normalize_angle(heading + i * 2.0 * std::numbers::pi / turns);
    sense(state, world, latent_score, fov, cache);
  }
  state.pose.heading = heading;
}

bool check_success(const RobotState& state, Point goal, double success_radius_m) {
  return squared_distance(state.pose.position(), goal) <= success_radius_m * success_radius_m + kRadiusSlack;
}

double reward_at(Point point, const ScoreMap& score, double radius_m, double scale) {
  const GridGeometry& g = score.geometry();
  const double r2 = radius_m * radius_m + kRadiusSlack;
  const int span = static_cast<int>(std::ceil(radius_m / g.resolution)) + 1;
  const Cell pc = g.world_to_cell(point);
  long long sum = 0;
  for (int r = std::max(0, pc.row - span); r <= std::min(g.height - 1, pc.row + span); ++r)
    for (int c = std::max(0, pc.col - span); c <= std::min(g.width - 1, pc.col + span); ++c)
      if (squared_distance(g.cell_center({r, c}), point) <= r2) sum += score.at({r, c});
  return scale * (static_cast<double>(sum) / 255.0);
}

namespace {

bool path_valid(const OccupancyGrid& observed, Cell from, std::span<const Cell> path) {
  Cell prev = from;
  for (const Cell& c : path) {
    if (!move_allowed(observed, prev, c, true)) return false;
    prev = c;
  }
  return true;
}


}  // namespace

GotoResult goto_subgoal(RobotState& state, Point subgoal, const OccupancyGrid& world, const ScoreMap& latent_score,
                        int max_steps, const SimConfig& cfg, std::optional<Point> stop_goal, const GotoHooks& hooks) {
  const GridGeometry& g = world.geometry();
  GotoResult res;
  res.trace.push_back(state.pose.position());
  const Cell target = g.world_to_cell(subgoal);
  if (!g.contains(target)) throw UnreachableError();
  Cell cur = g.world_to_cell(state.pose.position());
  if (cur == target) {
    res.reached = true;
    return res;
  }

  IncrementalPlanner planner(state.observed, target, true);
  std::vector<std::size_t> blocked;
  const auto mark_obstacle = [&](Cell c) {
    if (state.observed.at(c) == CellState::Obstacle) return;
    state.observed.at(c) = CellState::Obstacle;
    blocked.push_back(g.index(c));
  };
  const auto look = [&] { sense_tracked(state, world, latent_score, cfg.fov, hooks.visibility, &blocked); };
  const auto search = [&] {
    for (const std::size_t i : blocked) planner.cell_changed(g.cell_at(i));
    blocked.clear();
    return planner.plan(cur);
  };

  auto first = search();
  if (!first) throw UnreachableError();
  std::vector<Cell> path = std::move(first->cells);
  std::size_t next_i = 0;
  const auto remaining = [&] { return std::span<const Cell>(path).subspan(next_i); };
  // Mid-route failures end the round with partial progress instead of throwing.
  const auto replan = [&] {
    ++res.replans;
    auto p = search();
    if (!p) return false;
    path = std::move(p->cells);
    next_i = 0;
    return true;
  };

  while (res.moves < max_steps && cur != target) {
    const Cell next = path[next_i];
    const Point np = g.cell_center(next);
    const double heading = normalize_angle(std::atan2(np.y - state.pose.y, np.x - state.pose.x));
    if (heading != state.pose.heading) {
      state.pose.heading = heading;
      look();
    }
    // Contact check for diagonal moves squeezing past unseen corners.
    if (next.row != cur.row && next.col != cur.col) {
      for (const Cell side : {Cell{next.row, cur.col}, Cell{cur.row, next.col}}) {
        if (world.at(side) == CellState::Obstacle) mark_obstacle(side);
      }
    }
    if (world.at(next) != CellState::Free) mark_obstacle(next);
    if (!path_valid(state.observed, cur, remaining())) {
      if (!replan()) {
        res.blocked = true;
        break;
      }
      continue;
    }

    const Point prev = state.pose.position();
    state.pose.x = np.x;
    state.pose.y = np.y;
    state.path_length += distance(prev, np);
    ++state.step_count;
    ++res.moves;
    cur = next;
    ++next_i;
    res.trace.push_back(np);
    look();
    if (cur != target && !path_valid(state.observed, cur, remaining()) && !replan()) {
      res.blocked = true;
      break;
    }
    if (hooks.on_move) hooks.on_move(state, remaining());
    if (stop_goal && check_success(state, *stop_goal, cfg.success_radius_m)) {
      res.goal_reached = true;
      break;
    }
  }
  res.reached = cur == target;
  return res;
}

SubgoalProposal RandomFrontierPlanner::plan(const PlanContext& ctx, Rng& rng) const {
  return rf_plan(ctx.frontiers, ctx.state.observed.geometry(), rng);
}

SubgoalProposal TfpPlanner::plan(const PlanContext& ctx, Rng& rng) const {
  const auto tfp = tfp_plan(ctx.state.observed_score, cfg_);
  if (!tfp.proposal.valid) return rf_plan(ctx.frontiers, ctx.state.observed.geometry(), rng);
  SubgoalProposal out = tfp.proposal;
  if (!ctx.frontiers.empty()) {
    const GridGeometry& g = ctx.state.observed.geometry();
    out.point = g.cell_center(nearest_frontier(tfp.proposal.point, ctx.frontiers, g));
  }
  return out;
}

double shortest_success_length(const OccupancyGrid& world, Point start, Point goal, double success_radius_m) {
  const GridGeometry& g = world.geometry();
  const double r2 = success_radius_m * success_radius_m + kRadiusSlack;
  const auto path = dijkstra_to_any(
      world, g.world_to_cell(start), [&](Cell c) { return squared_distance(g.cell_center(c), goal) <= r2; }, false);
  if (!path) throw Error("goal region unreachable in the true world");
  return std::max(path->cost_m, g.resolution);
}

namespace {

Point random_observed_free(const RobotState& state, Rng& rng) {
  const auto cells = free_cells(state.observed);
  if (cells.empty()) return state.pose.position();
  return state.observed.geometry().cell_center(cells[uniform_index(rng, cells.size())]);
}

Point fallback_subgoal(const RobotState& state, const FrontierSet& frontiers, Rng& rng) {
  if (!frontiers.empty()) return rf_plan(frontiers, state.observed.geometry(), rng).point;
  return random_observed_free(state, rng);
}

}  // namespace

EpisodeOutcome run_episode(const EpisodeSpec& spec, const ScoreMap& latent_score, const Planner& planner,
                           const SimConfig& cfg, const EpisodeHooks& hooks) {
  const OccupancyGrid& world = spec.workspace;
  if (world.geometry() != latent_score.geometry()) throw Error("latent score geometry differs from the world");
  RobotState state = RobotState::initial(spec.start, world.geometry());
  Rng rng(derive_seed(spec.seed, Stream::kPlanner));
  GotoHooks go_hooks = hooks.go;
  std::optional<VisibilityCache> local_cache;
  if (!go_hooks.visibility) go_hooks.visibility = &local_cache.emplace(world, cfg.fov);
  VisibilityCache* const vis = go_hooks.visibility;

  EpisodeOutcome out;
  out.shortest_length = shortest_success_length(world, spec.start.position(), spec.goal, cfg.success_radius_m);
  sense(state, world, latent_score, cfg.fov, vis);
  if (cfg.scan_on_arrival) scan_around(state, world, latent_score, cfg.fov, vis);
  if (check_success(state, spec.goal, cfg.success_radius_m)) {
    out.success = true;
    return out;
  }

  const RandomFrontierPlanner rf;
  for (int round = 0; round < cfg.step_budget; ++round) {
    const Planner& active = round < cfg.S ? static_cast<const Planner&>(rf) : planner;
    const FrontierSet frontiers = detect_frontiers(state.observed);
    RoundRecord rec;
    rec.step = round;
    rec.planner = active.name();

    SubgoalProposal proposal;
    try {
      proposal = active.plan(PlanContext{state, frontiers, spec.predicted_goal, spec.K}, rng);
    } catch (const Error&) {
      proposal.valid = false;
    }
    if (!proposal.valid) {
      proposal = {fallback_subgoal(state, frontiers, rng), 0.0, PlannerSource::RF, true};
      rec.fallback = true;
    }
    rec.source = std::string(to_string(proposal.source));
    rec.subgoal = proposal.point;

    GotoResult go;
    try {
      go = goto_subgoal(state, proposal.point, world, latent_score, cfg.max_moves_per_round, cfg, spec.goal, go_hooks);
    } catch (const UnreachableError&) {
      go.blocked = true;
    }
    if (go.blocked && !go.goal_reached) {
      rec.fallback = true;
      auto trace = std::move(go.trace);
      rec.subgoal = fallback_subgoal(state, frontiers, rng);
      try {
        go = goto_subgoal(state, rec.subgoal, world, latent_score, cfg.max_moves_per_round, cfg, spec.goal, go_hooks);
      } catch (const UnreachableError&) {
        go = {};
      }
      if (trace.empty()) trace.push_back(state.pose.position());
      trace.insert(trace.end(), go.trace.begin() + (go.trace.empty() ? 0 : 1), go.trace.end());
      go.trace = std::move(trace);
    }
    if (cfg.scan_on_arrival && !go.goal_reached) scan_around(state, world, latent_score, cfg.fov, vis);

    const bool success = check_success(state, spec.goal, cfg.success_radius_m);
    rec.pose = state.pose;
    rec.reward = reward_at(state.pose.position(), latent_score, cfg.reward_radius_m, cfg.reward_scale);
    rec.path_length = state.path_length;
    rec.success = success;
    rec.trace = std::move(go.trace);
    out.log.rounds.push_back(std::move(rec));
    out.steps = round + 1;
    if (success) {
      out.success = true;
      break;
    }
  }
  out.path_length = state.path_length;
  out.moves = state.step_count;
  return out;
}

std::string episode_log_jsonl(const EpisodeLog& log) {
  std::string out;
  for (const RoundRecord& r : log.rounds) {
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["planner"] = r.planner;
    j["source"] = r.source;
    j["pose"] = {r.pose.x, r.pose.y, r.pose.heading};
    j["subgoal"] = {r.subgoal.x, r.subgoal.y};
    j["reward"] = r.reward;
    j["path_length"] = r.path_length;
    j["success"] = r.success;
    j["fallback"] = r.fallback;
    auto trace = nlohmann::ordered_json::array();
    for (const Point& p : r.trace) trace.push_back({p.x, p.y});
    j["trace"] = std::move(trace);
    out += j.dump();
    out += '\n';
  }
  return out;
}

EpisodeLog parse_episode_log(std::string_view jsonl) {
  EpisodeLog log;
  std::size_t start = 0;
  int lineno = 0;
  while (start < jsonl.size()) {
    auto end = jsonl.find('\n', start);
    if (end == std::string_view::npos) end = jsonl.size();
    const auto line = jsonl.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RoundRecord r;
      r.step = j.at("step").get<int>();
      r.planner = j.at("planner").get<std::string>();
      r.source = j.value("source", std::string{});
      const auto& pose = j.at("pose");
      r.pose = {pose.at(0).get<double>(), pose.at(1).get<double>(), pose.at(2).get<double>()};
      r.subgoal = {j.at("subgoal").at(0).get<double>(), j.at("subgoal").at(1).get<double>()};
      r.reward = j.at("reward").get<double>();
      r.path_length = j.at("path_length").get<double>();
      r.success = j.at("success").get<bool>();
      r.fallback = j.value("fallback", false);
      for (const auto& p : j.at("trace")) r.trace.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      log.rounds.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error("episode log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return log;
}

double replay_path_length_error(const EpisodeLog& log) {
  double total = 0.0;
  double worst = 0.0;
  for (const RoundRecord& r : log.rounds) {
    for (std::size_t i = 1; i < r.trace.size(); ++i) total += distance(r.trace[i - 1], r.trace[i]);
    worst = std::max(worst, std::abs(total - r.path_length));
  }
  return worst;
}

}  // namespace alcon
