#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "alcon/neural.hpp"
#include "alcon/random.hpp"

using namespace alcon;
using namespace alcon::nn;

namespace {

std::vector<double> random_input(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = uniform01(rng);
  return v;
}

std::filesystem::path temp_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / ("alcon_test_neural_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("architecture text round-trips and shapes follow valid convolution") {
  const Architecture a = default_architecture(2);
  CHECK(a.describe() == "in:1x240x240 conv:8:5:4 relu conv:16:5:4 relu fc:2 sigmoid");
  CHECK(Architecture::parse(a.describe()) == a);
  CHECK(a.shapes()[1] == Shape{8, 59, 59});
  CHECK(a.shapes()[3] == Shape{16, 14, 14});
  CHECK(a.output_dim() == 2);
  CHECK(a.param_count() == 8 * 26 + 16 * (8 * 25 + 1) + 2 * (16 * 14 * 14 + 1));
  const Architecture c = default_architecture(1, 4);
  CHECK(c.describe() == "in:1x240x240 avgpool:4 conv:8:5:4 relu conv:16:5:4 relu fc:1");
  CHECK(c.output_dim() == 1);
  CHECK_THROWS_AS(Architecture::parse("in:1x4x4 conv:2:5:1"), Error);
  CHECK_THROWS_AS(Architecture::parse("in:1x8x8 pool:2"), Error);
  CHECK_THROWS_AS(Architecture::parse("in:1x8 fc:2"), Error);
}

TEST_CASE("forward: head sizes on full-size inputs, determinism, zero-weight actor at the centre") {
  Rng rng(1);
  const auto x = random_input(rng, 240 * 240);
  for (int head : {1, 2}) {
    const RegressionModel m = make_model(default_architecture(head), 3);
    const auto y = forward(m, x);
    CHECK(y.size() == static_cast<std::size_t>(head));
    CHECK(forward(m, x) == y);
  }
  RegressionModel zero = make_model(default_architecture(2, 4), 1);
  std::fill(zero.weights.begin(), zero.weights.end(), 0.0);
  const auto y = forward(zero, x);
  CHECK(y[0] == 0.5);
  CHECK(y[1] == 0.5);
  CHECK_THROWS_AS(forward(zero, std::vector<double>(10)), Error);
}

TEST_CASE("actor outputs stay in the unit square") {
  const RegressionModel m = make_model(Architecture::parse("in:1x24x24 conv:4:5:2 relu fc:2 sigmoid"), 5);
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    auto x = random_input(rng, 24 * 24);
    for (double& v : x) v *= 50.0 * uniform01(rng);  // push towards saturation
    const auto y = forward(m, x);
    CHECK(y[0] >= 0.0);
    CHECK(y[0] <= 1.0);
    CHECK(y[1] >= 0.0);
    CHECK(y[1] <= 1.0);
  }
}

TEST_CASE("gradients match central differences on randomized small networks") {
  const char* archs[] = {
      "in:1x12x12 conv:3:3:1 relu fc:2 sigmoid",
      "in:1x12x12 conv:2:5:2 relu conv:3:3:1 relu fc:1",
      "in:2x12x12 avgpool:2 conv:4:3:2 relu fc:3",
      "in:1x12x12 fc:4 relu fc:2 sigmoid",
  };
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    const Architecture a = Architecture::parse(archs[seed % 4]);
    RegressionModel m = make_model(a, seed);
    Rng rng(seed + 100);
    for (double& b : m.weights) b += 0.01 * (uniform01(rng) - 0.5);  // biases away from zero
    const auto x = random_input(rng, a.input_shape().size());
    const GradientCheck gc = gradient_check(m, x, seed);
    CHECK(gc.checked + gc.skipped == m.weights.size());
    CHECK(gc.skipped * 20 < m.weights.size());
    worst = std::max(worst, gc.max_relative_error);
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("gradient check skips probes that straddle a ReLU kink") {
  // Hidden pre-activation 5e-5: a 1e-4 probe of either first-layer weight flips it.
  RegressionModel m = make_model(Architecture::parse("in:1x1x1 fc:1 relu fc:1"), 1);
  REQUIRE(m.weights.size() == 4);
  m.weights = {5e-5, 0.0, 0.7, 0.2};
  const std::vector<double> x{1.0};
  const GradientCheck gc = gradient_check(m, x, 3, 1e-4);
  CHECK(gc.skipped == 2);
  CHECK(gc.checked == 2);
  CHECK(gc.max_relative_error < 1e-9);
  // Away from the kink everything is checked.
  m.weights = {0.5, 0.1, 0.7, 0.2};
  CHECK(gradient_check(m, x, 3, 1e-4).skipped == 0);
}

TEST_CASE("backward is linear in the output gradient") {
  const RegressionModel m = make_model(Architecture::parse("in:1x12x12 conv:3:3:2 relu fc:2"), 9);
  Rng rng(3);
  const auto x = random_input(rng, 144);
  const Tape t = forward_tape(m, x);
  const auto z = backward(m, t, std::vector<double>{0.0, 0.0});
  CHECK(std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; }));
  const auto g1 = backward(m, t, std::vector<double>{1.0, 0.0});
  const auto g2 = backward(m, t, std::vector<double>{0.0, 1.0});
  const auto g12 = backward(m, t, std::vector<double>{1.0, 1.0});
  for (std::size_t i = 0; i < g12.size(); ++i) CHECK(g12[i] == doctest::Approx(g1[i] + g2[i]).epsilon(1e-12));
}

TEST_CASE("sgd step arithmetic and descent") {
  RegressionModel m{Architecture::parse("in:1x1x1 fc:1"), {1.0, 0.0}, 0};
  sgd_step(m, std::vector<double>{2.0, 0.0}, 0.001);
  CHECK(m.weights[0] == static_cast<float>(0.998));
  const auto before = m.weights;
  sgd_step(m, std::vector<double>{5.0, -3.0}, 0.0);
  CHECK(m.weights == before);
  CHECK_THROWS_AS(sgd_step(m, std::vector<double>{1.0}, 0.1), Error);

  // Fit a fixed batch; the loss must go down step after step.
  RegressionModel net = make_model(Architecture::parse("in:1x6x6 fc:3 relu fc:1"), 4);
  Rng rng(6);
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (int i = 0; i < 8; ++i) {
    xs.push_back(random_input(rng, 36));
    ys.push_back(uniform01(rng));
  }
  const auto batch_loss = [&] {
    double l = 0.0;
    for (int i = 0; i < 8; ++i) {
      const double e = forward(net, xs[i])[0] - ys[i];
      l += e * e;
    }
    return l;
  };
  double prev = batch_loss();
  for (int step = 0; step < 20; ++step) {
    std::vector<double> grad(net.weights.size(), 0.0);
    for (int i = 0; i < 8; ++i) {
      const Tape t = forward_tape(net, xs[i]);
      const double e = t.output()[0] - ys[i];
      accumulate_gradient(net, t, std::vector<double>{2.0 * e}, grad);
    }
    sgd_step(net, grad, 0.01);
    const double now = batch_loss();
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("model files: bit-exact round trip and explicit errors") {
  const auto dir = temp_dir("io");
  const RegressionModel m = make_model(default_architecture(2, 4), 77);
  save_model(m, dir / "a.bin");
  const RegressionModel back = load_model(dir / "a.bin");
  CHECK(back.weights == m.weights);
  CHECK(back.arch == m.arch);
  CHECK(back.seed == 77);
  Rng rng(1);
  const auto x = random_input(rng, 240 * 240);
  CHECK(forward(back, x) == forward(m, x));
  save_model(back, dir / "b.bin");
  CHECK(slurp(dir / "a.bin") == slurp(dir / "b.bin"));

  const std::string bytes = slurp(dir / "a.bin");
  const auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream(dir / name, std::ios::binary) << content;
    return dir / name;
  };
  CHECK_THROWS_WITH_AS(load_model(write("trunc.bin", bytes.substr(0, bytes.size() - 3))),
                       doctest::Contains("truncated"), Error);
  std::string v2 = bytes;
  v2.replace(v2.find("version=1"), 9, "version=2");
  CHECK_THROWS_WITH_AS(load_model(write("v2.bin", v2)), doctest::Contains("version"), Error);
  CHECK_THROWS_WITH_AS(load_model(write("magic.bin", "XX" + bytes)), doctest::Contains("not a model"), Error);
  std::string corrupt = bytes;
  corrupt.replace(corrupt.find("arch="), 5, "arxh=");
  CHECK_THROWS_WITH_AS(load_model(write("corrupt.bin", corrupt)), doctest::Contains("corrupt header"), Error);
  CHECK_THROWS_AS(load_model(dir / "missing.bin"), Error);
  CHECK_THROWS_AS(load_model(write("extra.bin", bytes + "x")), Error);
}
