#include "alcon/model_input.hpp"

namespace alcon {

Point CropTransform::decode(double u, double v) const {
  const Point lo = min_corner();
  return {lo.x + u * extent_x(), lo.y + v * extent_y()};
}

std::pair<double, double> CropTransform::encode(Point p) const {
  const Point lo = min_corner();
  return {(p.x - lo.x) / extent_x(), (p.y - lo.y) / extent_y()};
}

std::vector<std::uint8_t> crop_resize_levels(const ScoreMap& score, const BoundingBox& box, int size) {
  if (size <= 0) throw Error("model input size must be positive");
  if (!score.contains(box.min) || !score.contains(box.max) || box.min.row > box.max.row || box.min.col > box.max.col)
    throw Error("bounding box outside score map");
  const int rows = box.rows();
  const int cols = box.cols();
  std::vector<std::uint8_t> out(static_cast<std::size_t>(size) * size);
  for (int i = 0; i < size; ++i) {
    const int src_r = box.min.row + static_cast<int>(static_cast<long long>(i) * rows / size);
    for (int j = 0; j < size; ++j) {
      const int src_c = box.min.col + static_cast<int>(static_cast<long long>(j) * cols / size);
      out[static_cast<std::size_t>(i) * size + j] = score.at({src_r, src_c});
    }
  }
  return out;
}

ModelInput encode_model_input(const ScoreMap& score, const BoundingBox& box, int size) {
  const auto levels = crop_resize_levels(score, box, size);
  ModelInput in;
  in.size = size;
  in.values.resize(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) in.values[i] = levels[i] / 255.0;
  in.transform = {box, score.geometry()};
  return in;
}

}  // namespace alcon
