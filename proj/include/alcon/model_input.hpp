#pragma once

#include <vector>

#include "alcon/grid.hpp"

namespace alcon {

inline constexpr int kModelInputSize = 240;

// Maps normalized model outputs back to the world through the crop box.
struct CropTransform {
  BoundingBox box;
  GridGeometry geometry;  // geometry of the grid the box indexes into

  Point min_corner() const {
    return {geometry.origin.x + box.min.col * geometry.resolution, geometry.origin.y + box.min.row * geometry.resolution};
  }
  Point max_corner() const { return decode(1.0, 1.0); }
  double extent_x() const { return box.cols() * geometry.resolution; }
  double extent_y() const { return box.rows() * geometry.resolution; }

  // (u, v) in [0,1]^2 -> point in the box; u runs along columns, v along rows.
  Point decode(double u, double v) const;
  // Inverse of decode (not clamped).
  std::pair<double, double> encode(Point p) const;
};

struct ModelInput {
  int size = kModelInputSize;
  std::vector<double> values;  // size*size, row-major, in [0,1]
  CropTransform transform;
};

// Crops `box`, resamples it to size x size by nearest neighbour and scales
// scores to [0,1].
ModelInput encode_model_input(const ScoreMap& score, const BoundingBox& box, int size = kModelInputSize);

// Same resampling, but keeps raw 0..255 levels (compact training cache).
std::vector<std::uint8_t> crop_resize_levels(const ScoreMap& score, const BoundingBox& box, int size);

}  // namespace alcon
