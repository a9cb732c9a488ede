#pragma once

#include <filesystem>

#include "alcon/grid.hpp"

namespace alcon {

// Binary PGM (P5, maxval 255). File row 0 is grid row 0. Geometry lives in a
// sidecar `<stem>.hdr` holding `resolution=<m> origin_x=<m> origin_y=<m>`.
void write_score_pgm(const ScoreMap& map, const std::filesystem::path& path);
ScoreMap read_score_pgm(const std::filesystem::path& path);

// Occupancy levels: 0 = Unknown, 128 = Free, 255 = Obstacle.
void write_occupancy_pgm(const OccupancyGrid& grid, const std::filesystem::path& path);
OccupancyGrid read_occupancy_pgm(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& pgm);

}  // namespace alcon
