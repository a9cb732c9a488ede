#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "alcon/grid.hpp"
#include "alcon/random.hpp"

namespace alcon {

struct WorldParams {
  int canvas_width = 480;
  int canvas_height = 480;
  double resolution = 0.1;
  double extent_min_m = 48.0;  // workspace side lengths are drawn from [min, max]
  double extent_max_m = 48.0;
  int rooms_min = 4;
  int rooms_max = 9;
  double door_min_m = 1.2;
  double door_max_m = 2.0;
  double min_room_m = 5.0;
  double wall_thickness_m = 0.2;
  double obstacle_density = 0.02;  // fraction of the interior covered by clutter

  void validate() const;
};

// Rooms-and-corridors workspace. Inside the workspace rectangle: Free floor,
// Obstacle walls and clutter, exactly one connected Free component. Cells of
// the canvas outside the workspace stay Unknown.
OccupancyGrid gen_workspace(std::uint64_t seed, const WorldParams& params);

// One element of the dihedral group acting on the grid: optional flips, then
// a counter-clockwise rotation by quarter_turns * 90 degrees.
struct Augmentation {
  bool flip_h = false;  // mirror columns
  bool flip_v = false;  // mirror rows
  int quarter_turns = 0;

  static Augmentation draw(Rng& rng);
  bool is_identity() const { return !flip_h && !flip_v && quarter_turns % 4 == 0; }

  GridGeometry apply(const GridGeometry& g) const;
  Cell apply(Cell c, const GridGeometry& source) const;
  Point apply(Point p, const GridGeometry& source) const;
  template <typename T>
  Grid<T> apply(const Grid<T>& grid) const;
};

template <typename T>
Grid<T> Augmentation::apply(const Grid<T>& grid) const {
  const GridGeometry& src = grid.geometry();
  Grid<T> out(apply(src), T{});
  for (int r = 0; r < src.height; ++r)
    for (int c = 0; c < src.width; ++c) out.at(apply(Cell{r, c}, src)) = grid.at({r, c});
  return out;
}

struct AugmentedPair {
  OccupancyGrid grid;
  ScoreMap score;
  Augmentation op;
};

AugmentedPair augment(const OccupancyGrid& grid, const ScoreMap& score, std::uint64_t seed);

struct TrainingSample {
  ScoreMap score;
  OccupancyGrid obstacle;
  Point gt_subgoal;
};

inline constexpr double kDiskRadiusM = 2.0;
inline constexpr std::array<std::uint8_t, 3> kOnDiskScores{255, 150, 50};

// Three r'=2 m disks scored 255/150/50 centred on distinct Free cells; the
// ground-truth subgoal is the centre of the 255 disk.
TrainingSample gen_on_scoremap(const OccupancyGrid& grid, std::uint64_t seed, double disk_radius_m = kDiskRadiusM);

struct AlcScoreMap {
  ScoreMap score;
  Point true_goal;
};

// A single 255 disk at a goal drawn uniformly from the Free cells within K of
// the predicted goal. K = 0 snaps to the nearest Free cell.
AlcScoreMap gen_alc_scoremap(const OccupancyGrid& grid, Point predicted_goal, double K, std::uint64_t seed,
                             double disk_radius_m = kDiskRadiusM);

struct EpisodeSpec {
  OccupancyGrid workspace;
  Pose start;
  Point goal;
  Point predicted_goal;
  double K = 0.0;
  std::uint64_t seed = 0;
};

struct EpisodeSampling {
  double min_separation_m = 0.0;  // geodesic start-goal distance lower bound
  int max_retry = 100;
};

EpisodeSpec sample_episode(const OccupancyGrid& grid, double K, std::uint64_t seed,
                           const EpisodeSampling& sampling = {});

// Latent semantic scores of an episode world: a 255 disk at the goal and two
// weaker context disks (150, 50) at Free cells whose distance to the goal
// falls in the configured rings.
struct CueParams {
  double near_min_m = 3.0;
  double near_max_m = 8.0;
  double far_min_m = 6.0;
  double far_max_m = 14.0;
  double disk_radius_m = kDiskRadiusM;
};

ScoreMap gen_latent_scores(const OccupancyGrid& world, Point goal, const CueParams& cues, std::uint64_t seed);

std::vector<Cell> free_cells(const OccupancyGrid& grid);

// Number of 4-connected Free components. Diagonal moves need both orthogonal
// cells free, so this is also the component count under the motion model.
int count_free_components(const OccupancyGrid& grid);

// Structural check of a sample; returns an empty string when valid.
std::string validate_sample(const TrainingSample& s, double disk_radius_m = kDiskRadiusM);

}  // namespace alcon
