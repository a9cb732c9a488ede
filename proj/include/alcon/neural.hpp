#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "alcon/model_input.hpp"

namespace alcon::nn {

enum class LayerKind { AvgPool, Conv, Relu, Dense, Sigmoid };

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int out_channels = 0;  // conv
  int kernel = 0;        // conv
  int stride = 1;        // conv
  int out_dim = 0;       // dense
  int factor = 1;        // avgpool
};

struct Shape {
  int c = 1, h = 1, w = 1;
  std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

// Layer list plus derived shapes and parameter offsets. Text form, e.g.
//   in:1x240x240 avgpool:4 conv:8:5:4 relu conv:16:5:4 relu fc:2 sigmoid
// where conv:<out>:<kernel>:<stride> uses valid padding and fc flattens.
class Architecture {
 public:
  Architecture() = default;
  Architecture(Shape input, std::vector<LayerSpec> layers);

  static Architecture parse(std::string_view text);
  std::string describe() const;

  const Shape& input_shape() const { return input_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  // shapes()[i] is the input of layer i; shapes().back() is the output.
  const std::vector<Shape>& shapes() const { return shapes_; }
  std::size_t param_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t param_count() const { return offsets_.back(); }
  std::size_t output_dim() const { return shapes_.back().size(); }

  friend bool operator==(const Architecture& a, const Architecture& b) { return a.describe() == b.describe(); }

 private:
  Shape input_{};
  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_;
  std::vector<std::size_t> offsets_{0};
};

// conv(8,5x5,s4) -> relu -> conv(16,5x5,s4) -> relu -> fc(head_dim), with an
// optional leading average pool and a logistic head for the 2-D actor.
Architecture default_architecture(int head_dim, int downsample = 1, int input_size = kModelInputSize);

struct RegressionModel {
  Architecture arch;
  std::vector<double> weights;  // every value is exactly representable as float
  std::uint64_t seed = 0;

  int head_dim() const { return static_cast<int>(arch.output_dim()); }
};

RegressionModel make_model(const Architecture& arch, std::uint64_t seed);

// Activations of every layer; acts[0] is the input, acts.back() the output.
struct Tape {
  std::vector<std::vector<double>> acts;
  std::span<const double> output() const { return acts.back(); }
};

Tape forward_tape(const RegressionModel& model, std::span<const double> input);
std::vector<double> forward(const RegressionModel& model, std::span<const double> input);
std::vector<double> forward(const RegressionModel& model, const ModelInput& input);

// Adds d(loss)/d(weights) to `grad` given d(loss)/d(output).
void accumulate_gradient(const RegressionModel& model, const Tape& tape, std::span<const double> output_grad,
                         std::span<double> grad);
std::vector<double> backward(const RegressionModel& model, const Tape& tape, std::span<const double> output_grad);

// w <- w - lr * g, rounded to float precision so that weight files round-trip.
void sgd_step(RegressionModel& model, std::span<const double> grad, double lr);

// Central-difference check of backward() for the loss sum_k c_k * out_k with
// fixed random coefficients c. Returns the largest relative error
// |a - n| / max(|a|, |n|) over all weights; pairs where both magnitudes are
// below `floor` are measured against `floor` instead. Weights whose probe
// flips the sign of any ReLU input are skipped: the loss has a kink inside
// the difference interval there, so the central difference is meaningless.
struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};
GradientCheck gradient_check(const RegressionModel& model, std::span<const double> input, std::uint64_t seed,
                             double eps = 1e-4, double floor = 1e-7);

inline constexpr int kModelFileVersion = 1;

void save_model(const RegressionModel& model, const std::filesystem::path& path);
RegressionModel load_model(const std::filesystem::path& path);

}  // namespace alcon::nn
