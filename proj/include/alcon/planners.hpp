#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "alcon/grid.hpp"
#include "alcon/random.hpp"

namespace alcon {

// Free cells that are 4-adjacent to at least one Unknown cell, in (row, col) order.
struct FrontierSet {
  std::vector<Cell> cells;

  bool empty() const { return cells.empty(); }
  std::size_t size() const { return cells.size(); }
};

enum class PlannerSource { RF, TFP, RLP_ON, RLP_ALC, FUSED };

std::string_view to_string(PlannerSource s);

struct SubgoalProposal {
  Point point{};
  double score = 0.0;
  PlannerSource source = PlannerSource::RF;
  bool valid = true;
};

FrontierSet detect_frontiers(const OccupancyGrid& observed);

// Uniformly random frontier cell center. Throws "no frontier" on an empty set.
SubgoalProposal rf_plan(const FrontierSet& frontiers, const GridGeometry& geometry, Rng& rng);

// Closest frontier to `p` (Euclidean, cell centers); ties go to the lowest (row, col).
Cell nearest_frontier(Point p, const FrontierSet& frontiers, const GridGeometry& geometry);

struct TfpConfig {
  double disk_radius_m = 2.0;  // radius of the re-rendered score disks
  double nms_radius_m = 2.0;   // peaks closer than this to a stronger one are suppressed
  int max_peaks = 3;
};

// Disk levels assigned by peak rank.
inline constexpr std::array<std::uint8_t, 3> kRankScores{255, 150, 50};

struct Peak {
  Cell cell;
  std::uint8_t value = 0;
};

// Maximal plateaus of the score map, each represented by its cell nearest to
// the plateau centroid, ordered by (value desc, row, col) and thinned by
// non-maximum suppression.
std::vector<Peak> extract_peaks(const ScoreMap& score, const TfpConfig& cfg);

struct TfpResult {
  SubgoalProposal proposal;  // p_M; invalid when the map is all zero
  std::vector<Peak> peaks;
  ScoreMap clean;  // peaks re-rendered as 255/150/50 disks
};

TfpResult tfp_plan(const ScoreMap& observed_score, const TfpConfig& cfg);

inline bool traversable(CellState s, bool unknown_traversable) {
  return s == CellState::Free || (unknown_traversable && s == CellState::Unknown);
}

// Step counts of an 8-connected path. Cost comparisons and the metric length
// are derived from the counts so that equal paths always yield equal doubles.
struct PathSteps {
  int straight = 0;
  int diagonal = 0;

  double units() const { return straight + diagonal * std::numbers::sqrt2; }
  double meters(double resolution) const { return units() * resolution; }
  friend bool operator==(const PathSteps&, const PathSteps&) = default;
};

struct Path {
  std::vector<Cell> cells;  // excludes the start cell; empty when start == goal
  PathSteps steps;
  double cost_m = 0.0;
};

// 8-connected shortest path. Straight steps cost 1, diagonal sqrt(2), times
// the resolution. Diagonal moves may not cut a blocked corner. Returns
// nullopt when `b` is unreachable or not traversable.
std::optional<Path> dijkstra(const OccupancyGrid& grid, Cell a, Cell b, bool unknown_traversable);

// Shortest path to the nearest cell accepted by `is_target`.
std::optional<Path> dijkstra_to_any(const OccupancyGrid& grid, Cell a, const std::function<bool(Cell)>& is_target,
                                    bool unknown_traversable);

// Neighbour offsets in scan order (also the tie-break order).
inline constexpr std::array<std::array<int, 2>, 8> kNeighbours8{
    {{-1, 0}, {0, -1}, {0, 1}, {1, 0}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}}};

bool move_allowed(const OccupancyGrid& grid, Cell from, Cell to, bool unknown_traversable);

// D* Lite towards a fixed goal over a grid that the caller keeps mutating.
// After the caller changes a cell's traversability it reports the cell via
// cell_changed(); plan() then repairs the previous search instead of starting
// over. Paths are shortest under the same cost and move rules as dijkstra(),
// though equal-cost ties may resolve differently.
class IncrementalPlanner {
 public:
  IncrementalPlanner(const OccupancyGrid& grid, Cell goal, bool unknown_traversable);
  ~IncrementalPlanner();
  IncrementalPlanner(const IncrementalPlanner&) = delete;
  IncrementalPlanner& operator=(const IncrementalPlanner&) = delete;

  void cell_changed(Cell c);
  std::optional<Path> plan(Cell start);

  struct Buffers;

 private:
  std::int64_t key_g(std::size_t i) const;
  std::int64_t rhs(std::size_t i) const;
  void set_g(std::size_t i, std::int64_t v);
  void set_rhs(std::size_t i, std::int64_t v);
  std::int64_t cost(std::size_t from, std::size_t to) const;  // "infinite" when the move is not allowed
  std::int64_t best_successor(std::size_t i) const;
  void update_vertex(std::size_t i);
  void push(std::size_t i);
  void compute(std::size_t start);

  const OccupancyGrid& grid_;
  std::size_t goal_;
  bool unknown_;
  std::int64_t km_ = 0;
  std::optional<std::size_t> last_start_;
  Buffers* buf_;
};

}  // namespace alcon
