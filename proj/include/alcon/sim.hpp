#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "alcon/grid.hpp"
#include "alcon/planners.hpp"
#include "alcon/random.hpp"
#include "alcon/worldgen.hpp"

namespace alcon {

struct SimConfig {
  FovConfig fov{};
  double success_radius_m = 1.6;
  int S = 5;                 // rounds of random-frontier planning before the planner under test
  int step_budget = 50;      // total subgoal rounds per episode
  int max_moves_per_round = 400;
  bool scan_on_arrival = true;  // rotate in place through 360 degrees after each round
  double reward_radius_m = 2.0;
  double reward_scale = 0.001;

  void validate() const;
};

struct RobotState {
  Pose pose;
  OccupancyGrid observed;   // Unknown until sensed
  ScoreMap observed_score;  // accumulated latent scores
  double path_length = 0.0;
  int step_count = 0;  // primitive cell moves

  static RobotState initial(const Pose& start, const GridGeometry& geometry);
};

// Memoized sector_visible_cells for one static world. Poses are keyed
// exactly; robots revisit cell centers at a handful of headings, and paired
// planners replay the same opening rounds. The world must not change while
// the cache is in use. Cleared wholesale once `max_cells` entries accumulate.
class VisibilityCache {
 public:
  VisibilityCache(const OccupancyGrid& world, const FovConfig& fov, std::size_t max_cells = std::size_t{1} << 24);

  std::span<const std::uint32_t> visible(const Pose& pose);  // cell indices
  bool serves(const OccupancyGrid& world, const FovConfig& fov) const {
    return &world == &world_ && fov.radius_m == fov_.radius_m && fov.angle_deg == fov_.angle_deg;
  }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }

 private:
  struct Key {
    std::uint64_t x, y, heading;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  const OccupancyGrid& world_;
  FovConfig fov_;
  std::size_t max_cells_;
  std::size_t stored_ = 0;
  std::size_t hits_ = 0, misses_ = 0;
  std::unordered_map<Key, std::vector<std::uint32_t>, KeyHash> entries_;
};

// Copies the visible part of the world and the latent score map into the state.
void sense(RobotState& state, const OccupancyGrid& world, const ScoreMap& latent_score, const FovConfig& fov,
           VisibilityCache* cache = nullptr);

// Senses at ceil(360 / angle) evenly spaced headings and restores the original heading.
void scan_around(RobotState& state, const OccupancyGrid& world, const ScoreMap& latent_score, const FovConfig& fov,
                 VisibilityCache* cache = nullptr);

bool check_success(const RobotState& state, Point goal, double success_radius_m = 1.6);

// 0.001 x the sum of normalized scores of cells within 2 m of `point`.
double reward_at(Point point, const ScoreMap& score, double radius_m = 2.0, double scale = 0.001);

struct GotoHooks {
  // Called after every primitive move with the remaining planned path.
  std::function<void(const RobotState&, std::span<const Cell> remaining)> on_move;
  // Optional; only valid while the world stays unchanged.
  VisibilityCache* visibility = nullptr;
};

struct GotoResult {
  bool reached = false;
  bool goal_reached = false;  // stopped early because the episode goal came within range
  bool blocked = false;       // a replan found no path; progress so far is kept
  int moves = 0;
  int replans = 0;
  std::vector<Point> trace;  // positions, starting with the pose before the first move
};

// Travels towards `subgoal` on the observed map with unknown cells treated as
// traversable, sensing before and after every move and replanning when the
// remaining path touches an observed Obstacle. Stops at the subgoal, after
// `max_steps` moves, or when `stop_goal` comes within the success radius.
// Throws UnreachableError when the observed map admits no path from the
// start; a failed replan later on returns with `blocked` set instead.
GotoResult goto_subgoal(RobotState& state, Point subgoal, const OccupancyGrid& world, const ScoreMap& latent_score,
                        int max_steps, const SimConfig& cfg, std::optional<Point> stop_goal = std::nullopt,
                        const GotoHooks& hooks = {});

// Everything a planner may look at when choosing the next subgoal.
struct PlanContext {
  const RobotState& state;
  const FrontierSet& frontiers;
  Point predicted_goal;
  double K;
};

class Planner {
 public:
  virtual ~Planner() = default;
  virtual std::string name() const = 0;
  virtual SubgoalProposal plan(const PlanContext& ctx, Rng& rng) const = 0;
};

class RandomFrontierPlanner final : public Planner {
 public:
  std::string name() const override { return "rf"; }
  SubgoalProposal plan(const PlanContext& ctx, Rng& rng) const override;
};

// Top TFP peak projected to its nearest frontier; RF when the score map is empty.
class TfpPlanner final : public Planner {
 public:
  explicit TfpPlanner(TfpConfig cfg = {}) : cfg_(cfg) {}
  std::string name() const override { return "tfp"; }
  SubgoalProposal plan(const PlanContext& ctx, Rng& rng) const override;

 private:
  TfpConfig cfg_;
};

struct RoundRecord {
  int step = 0;
  std::string planner;
  std::string source;
  Pose pose;
  Point subgoal;
  double reward = 0.0;
  double path_length = 0.0;
  bool success = false;
  bool fallback = false;
  std::vector<Point> trace;
};

struct EpisodeLog {
  std::vector<RoundRecord> rounds;
};

struct EpisodeOutcome {
  bool success = false;
  double path_length = 0.0;      // p
  double shortest_length = 0.0;  // l, oracle shortest path into the success region
  int steps = 0;                 // subgoal rounds executed
  int moves = 0;
  EpisodeLog log;
};

// Shortest true-world path from `start` into the disk of radius
// `success_radius_m` around `goal`, floored at one cell so that it is positive.
double shortest_success_length(const OccupancyGrid& world, Point start, Point goal, double success_radius_m);

struct EpisodeHooks {
  GotoHooks go;
};

// Two-phase protocol: S random-frontier rounds, then `planner` rounds until
// success or the round budget runs out.
EpisodeOutcome run_episode(const EpisodeSpec& spec, const ScoreMap& latent_score, const Planner& planner,
                           const SimConfig& cfg, const EpisodeHooks& hooks = {});

// JSON-lines episode log: one object per round.
std::string episode_log_jsonl(const EpisodeLog& log);
EpisodeLog parse_episode_log(std::string_view jsonl);

// Recomputes each round's cumulative path length from the per-move traces.
// Returns the largest absolute deviation from the logged values.
double replay_path_length_error(const EpisodeLog& log);

}  // namespace alcon
