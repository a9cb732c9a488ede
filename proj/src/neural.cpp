#include "alcon/neural.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "alcon/error.hpp"
#include "alcon/random.hpp"
#include "alcon/text.hpp"

namespace alcon::nn {

Architecture::Architecture(Shape input, std::vector<LayerSpec> layers) : input_(input), layers_(std::move(layers)) {
  if (input_.c <= 0 || input_.h <= 0 || input_.w <= 0) throw Error("architecture: bad input shape");
  shapes_.push_back(input_);
  Shape s = input_;
  for (const LayerSpec& l : layers_) {
    std::size_t params = 0;
    switch (l.kind) {
      case LayerKind::AvgPool:
        if (l.factor <= 0 || s.h / l.factor == 0 || s.w / l.factor == 0) throw Error("architecture: bad pool factor");
        s = {s.c, s.h / l.factor, s.w / l.factor};
        break;
      case LayerKind::Conv:
        if (l.out_channels <= 0 || l.kernel <= 0 || l.stride <= 0 || l.kernel > s.h || l.kernel > s.w)
          throw Error("architecture: conv layer does not fit its input");
        params = static_cast<std::size_t>(l.out_channels) * (static_cast<std::size_t>(s.c) * l.kernel * l.kernel + 1);
        s = {l.out_channels, (s.h - l.kernel) / l.stride + 1, (s.w - l.kernel) / l.stride + 1};
        break;
      case LayerKind::Dense:
        if (l.out_dim <= 0) throw Error("architecture: bad fc width");
        params = static_cast<std::size_t>(l.out_dim) * (s.size() + 1);
        s = {l.out_dim, 1, 1};
        break;
      case LayerKind::Relu:
      case LayerKind::Sigmoid:
        break;
    }
    shapes_.push_back(s);
    offsets_.push_back(offsets_.back() + params);
  }
}

Architecture Architecture::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tok;
  Shape input{};
  bool have_input = false;
  std::vector<LayerSpec> layers;
  const auto fields = [](const std::string& t) { return split(t, ':'); };
  const auto num = [&](const std::string& v) {
    try {
      const long long n = parse_int(v, "arch");
      return static_cast<int>(n);
    } catch (const Error&) {
      throw Error("architecture: bad number '" + v + "' in '" + std::string(text) + "'");
    }
  };
  while (in >> tok) {
    const auto f = fields(tok);
    if (f[0] == "in" && f.size() == 2) {
      const auto dims = split(f[1], 'x');
      if (dims.size() != 3) throw Error("architecture: bad input '" + tok + "'");
      input = {num(dims[0]), num(dims[1]), num(dims[2])};
      have_input = true;
    } else if (f[0] == "avgpool" && f.size() == 2) {
      layers.push_back({LayerKind::AvgPool, 0, 0, 1, 0, num(f[1])});
    } else if (f[0] == "conv" && f.size() == 4) {
      layers.push_back({LayerKind::Conv, num(f[1]), num(f[2]), num(f[3]), 0, 1});
    } else if (f[0] == "fc" && f.size() == 2) {
      layers.push_back({LayerKind::Dense, 0, 0, 1, num(f[1]), 1});
    } else if (tok == "relu") {
      layers.push_back({LayerKind::Relu});
    } else if (tok == "sigmoid") {
      layers.push_back({LayerKind::Sigmoid});
    } else {
      throw Error("architecture: unknown layer '" + tok + "'");
    }
  }
  if (!have_input) throw Error("architecture: missing input shape");
  return Architecture(input, std::move(layers));
}

std::string Architecture::describe() const {
  std::ostringstream out;
  out << "in:" << input_.c << 'x' << input_.h << 'x' << input_.w;
  for (const LayerSpec& l : layers_) {
    switch (l.kind) {
      case LayerKind::AvgPool: out << " avgpool:" << l.factor; break;
      case LayerKind::Conv: out << " conv:" << l.out_channels << ':' << l.kernel << ':' << l.stride; break;
      case LayerKind::Dense: out << " fc:" << l.out_dim; break;
      case LayerKind::Relu: out << " relu"; break;
      case LayerKind::Sigmoid: out << " sigmoid"; break;
    }
  }
  return out.str();
}

Architecture default_architecture(int head_dim, int downsample, int input_size) {
  std::ostringstream s;
  s << "in:1x" << input_size << 'x' << input_size;
  if (downsample > 1) s << " avgpool:" << downsample;
  s << " conv:8:5:4 relu conv:16:5:4 relu fc:" << head_dim;
  if (head_dim == 2) s << " sigmoid";
  return Architecture::parse(s.str());
}

RegressionModel make_model(const Architecture& arch, std::uint64_t seed) {
  RegressionModel m{arch, std::vector<double>(arch.param_count(), 0.0), seed};
  Rng rng(derive_seed(seed, Stream::kInit));
  const auto& layers = arch.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.kind != LayerKind::Conv && l.kind != LayerKind::Dense) continue;
    const Shape in = arch.shapes()[i];
    const std::size_t fan_in = l.kind == LayerKind::Conv ? static_cast<std::size_t>(in.c) * l.kernel * l.kernel : in.size();
    const std::size_t fan_out = l.kind == LayerKind::Conv ? static_cast<std::size_t>(l.out_channels) * l.kernel * l.kernel
                                                          : static_cast<std::size_t>(l.out_dim);
    const std::size_t outs = l.kind == LayerKind::Conv ? l.out_channels : l.out_dim;
    const bool relu_next = i + 1 < layers.size() && layers[i + 1].kind == LayerKind::Relu;
    // He for rectified layers, Glorot otherwise.
    const double bound = relu_next ? std::sqrt(6.0 / static_cast<double>(fan_in))
                                   : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t off = arch.param_offset(i);
    for (std::size_t k = 0; k < outs * fan_in; ++k) m.weights[off + k] = static_cast<float>(dist(rng));
  }
  return m;
}

namespace {

void conv_forward(const Shape& in_s, const Shape& out_s, const LayerSpec& l, const double* w, const double* in,
                  double* out) {
  const int k = l.kernel, st = l.stride;
  const std::size_t wsize = static_cast<std::size_t>(in_s.c) * k * k;
  const double* bias = w + static_cast<std::size_t>(out_s.c) * wsize;
  for (int o = 0; o < out_s.c; ++o) {
    const double* wo = w + o * wsize;
    for (int y = 0; y < out_s.h; ++y) {
      for (int x = 0; x < out_s.w; ++x) {
        double s = bias[o];
        for (int c = 0; c < in_s.c; ++c) {
          const double* wc = wo + static_cast<std::size_t>(c) * k * k;
          const double* ic = in + static_cast<std::size_t>(c) * in_s.h * in_s.w;
          for (int ky = 0; ky < k; ++ky) {
            const double* row = ic + static_cast<std::size_t>(y * st + ky) * in_s.w + x * st;
            const double* wr = wc + ky * k;
            for (int kx = 0; kx < k; ++kx) s += wr[kx] * row[kx];
          }
        }
        out[(static_cast<std::size_t>(o) * out_s.h + y) * out_s.w + x] = s;
      }
    }
  }
}

void conv_backward(const Shape& in_s, const Shape& out_s, const LayerSpec& l, const double* w, const double* in,
                   const double* dout, double* dw, double* din) {
  const int k = l.kernel, st = l.stride;
  const std::size_t wsize = static_cast<std::size_t>(in_s.c) * k * k;
  double* dbias = dw + static_cast<std::size_t>(out_s.c) * wsize;
  for (int o = 0; o < out_s.c; ++o) {
    const double* wo = w + o * wsize;
    double* dwo = dw + o * wsize;
    for (int y = 0; y < out_s.h; ++y) {
      for (int x = 0; x < out_s.w; ++x) {
        const double g = dout[(static_cast<std::size_t>(o) * out_s.h + y) * out_s.w + x];
        if (g == 0.0) continue;
        dbias[o] += g;
        for (int c = 0; c < in_s.c; ++c) {
          const std::size_t coff = static_cast<std::size_t>(c) * in_s.h * in_s.w;
          const std::size_t woff = static_cast<std::size_t>(c) * k * k;
          for (int ky = 0; ky < k; ++ky) {
            const std::size_t roff = coff + static_cast<std::size_t>(y * st + ky) * in_s.w + x * st;
            for (int kx = 0; kx < k; ++kx) {
              dwo[woff + ky * k + kx] += g * in[roff + kx];
              if (din) din[roff + kx] += g * wo[woff + ky * k + kx];
            }
          }
        }
      }
    }
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tape forward_tape(const RegressionModel& model, std::span<const double> input) {
  const Architecture& arch = model.arch;
  if (input.size() != arch.input_shape().size())
    throw Error("model input has " + std::to_string(input.size()) + " values, architecture expects " +
                std::to_string(arch.input_shape().size()));
  Tape tape;
  tape.acts.reserve(arch.layers().size() + 1);
  tape.acts.emplace_back(input.begin(), input.end());
  for (std::size_t i = 0; i < arch.layers().size(); ++i) {
    const LayerSpec& l = arch.layers()[i];
    const Shape& in_s = arch.shapes()[i];
    const Shape& out_s = arch.shapes()[i + 1];
    const std::vector<double>& in = tape.acts.back();
    std::vector<double> out(out_s.size(), 0.0);
    const double* w = model.weights.data() + arch.param_offset(i);
    switch (l.kind) {
      case LayerKind::AvgPool: {
        const int f = l.factor;
        const double inv = 1.0 / (f * f);
        for (int c = 0; c < out_s.c; ++c)
          for (int y = 0; y < out_s.h; ++y)
            for (int x = 0; x < out_s.w; ++x) {
              double s = 0.0;
              for (int dy = 0; dy < f; ++dy)
                for (int dx = 0; dx < f; ++dx)
                  s += in[(static_cast<std::size_t>(c) * in_s.h + y * f + dy) * in_s.w + x * f + dx];
              out[(static_cast<std::size_t>(c) * out_s.h + y) * out_s.w + x] = s * inv;
            }
        break;
      }
      case LayerKind::Conv:
        conv_forward(in_s, out_s, l, w, in.data(), out.data());
        break;
      case LayerKind::Dense: {
        const std::size_t n = in_s.size();
        const double* bias = w + static_cast<std::size_t>(l.out_dim) * n;
        for (int o = 0; o < l.out_dim; ++o) {
          double s = bias[o];
          const double* wo = w + static_cast<std::size_t>(o) * n;
          for (std::size_t j = 0; j < n; ++j) s += wo[j] * in[j];
          out[o] = s;
        }
        break;
      }
      case LayerKind::Relu:
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = in[j] > 0.0 ? in[j] : 0.0;
        break;
      case LayerKind::Sigmoid:
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = sigmoid(in[j]);
        break;
    }
    tape.acts.push_back(std::move(out));
  }
  return tape;
}

std::vector<double> forward(const RegressionModel& model, std::span<const double> input) {
  auto tape = forward_tape(model, input);
  return std::move(tape.acts.back());
}

std::vector<double> forward(const RegressionModel& model, const ModelInput& input) {
  return forward(model, std::span<const double>(input.values));
}

void accumulate_gradient(const RegressionModel& model, const Tape& tape, std::span<const double> output_grad,
                         std::span<double> grad) {
  const Architecture& arch = model.arch;
  if (output_grad.size() != arch.output_dim()) throw Error("output gradient size mismatch");
  if (grad.size() != model.weights.size()) throw Error("gradient buffer size mismatch");
  if (tape.acts.size() != arch.layers().size() + 1) throw Error("tape does not match the architecture");

  // No input gradient is needed below the first parameterized layer.
  std::size_t first_param = arch.layers().size();
  for (std::size_t i = 0; i < arch.layers().size(); ++i)
    if (arch.param_offset(i + 1) > arch.param_offset(i)) {
      first_param = i;
      break;
    }

  std::vector<double> dout(output_grad.begin(), output_grad.end());
  for (std::size_t ii = arch.layers().size(); ii-- > 0;) {
    if (ii < first_param) break;
    const LayerSpec& l = arch.layers()[ii];
    const Shape& in_s = arch.shapes()[ii];
    const Shape& out_s = arch.shapes()[ii + 1];
    const std::vector<double>& in = tape.acts[ii];
    const std::vector<double>& out = tape.acts[ii + 1];
    const bool need_din = ii > first_param;
    std::vector<double> din(need_din ? in_s.size() : 0, 0.0);
    const double* w = model.weights.data() + arch.param_offset(ii);
    double* dw = grad.data() + arch.param_offset(ii);
    switch (l.kind) {
      case LayerKind::AvgPool: {
        const int f = l.factor;
        const double inv = 1.0 / (f * f);
        if (need_din)
          for (int c = 0; c < out_s.c; ++c)
            for (int y = 0; y < out_s.h; ++y)
              for (int x = 0; x < out_s.w; ++x) {
                const double g = dout[(static_cast<std::size_t>(c) * out_s.h + y) * out_s.w + x] * inv;
                for (int dy = 0; dy < f; ++dy)
                  for (int dx = 0; dx < f; ++dx)
                    din[(static_cast<std::size_t>(c) * in_s.h + y * f + dy) * in_s.w + x * f + dx] += g;
              }
        break;
      }
      case LayerKind::Conv:
        conv_backward(in_s, out_s, l, w, in.data(), dout.data(), dw, need_din ? din.data() : nullptr);
        break;
      case LayerKind::Dense: {
        const std::size_t n = in_s.size();
        double* dbias = dw + static_cast<std::size_t>(l.out_dim) * n;
        for (int o = 0; o < l.out_dim; ++o) {
          const double g = dout[o];
          dbias[o] += g;
          if (g == 0.0) continue;
          const double* wo = w + static_cast<std::size_t>(o) * n;
          double* dwo = dw + static_cast<std::size_t>(o) * n;
          for (std::size_t j = 0; j < n; ++j) {
            dwo[j] += g * in[j];
            if (need_din) din[j] += g * wo[j];
          }
        }
        break;
      }
      case LayerKind::Relu:
        if (need_din)
          for (std::size_t j = 0; j < din.size(); ++j) din[j] = in[j] > 0.0 ? dout[j] : 0.0;
        break;
      case LayerKind::Sigmoid:
        if (need_din)
          for (std::size_t j = 0; j < din.size(); ++j) din[j] = dout[j] * out[j] * (1.0 - out[j]);
        break;
    }
    dout = std::move(din);
  }
}

std::vector<double> backward(const RegressionModel& model, const Tape& tape, std::span<const double> output_grad) {
  std::vector<double> grad(model.weights.size(), 0.0);
  accumulate_gradient(model, tape, output_grad, grad);
  return grad;
}

GradientCheck gradient_check(const RegressionModel& model, std::span<const double> input, std::uint64_t seed,
                             double eps, double floor) {
  Rng rng(seed);
  std::vector<double> coeff(model.arch.output_dim());
  for (double& c : coeff) c = uniform01(rng) * 2.0 - 1.0;
  const auto& layers = model.arch.layers();
  // Sign of every ReLU input; a probe that flips one straddles a kink.
  const auto pattern = [&](const Tape& t) {
    std::vector<bool> bits;
    for (std::size_t l = 0; l < layers.size(); ++l)
      if (layers[l].kind == LayerKind::Relu)
        for (double v : t.acts[l]) bits.push_back(v > 0.0);
    return bits;
  };
  const auto loss = [&](const Tape& t) {
    const auto out = t.output();
    double l = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k) l += coeff[k] * out[k];
    return l;
  };
  const Tape base = forward_tape(model, input);
  const std::vector<bool> base_pattern = pattern(base);
  const auto analytic = backward(model, base, coeff);
  RegressionModel probe = model;
  GradientCheck res;
  for (std::size_t i = 0; i < probe.weights.size(); ++i) {
    const double w = probe.weights[i];
    probe.weights[i] = w + eps;
    const Tape up = forward_tape(probe, input);
    probe.weights[i] = w - eps;
    const Tape down = forward_tape(probe, input);
    probe.weights[i] = w;
    if (pattern(up) != base_pattern || pattern(down) != base_pattern) {
      ++res.skipped;
      continue;
    }
    const double numeric = (loss(up) - loss(down)) / (2.0 * eps);
    const double scale = std::max(std::abs(analytic[i]), std::abs(numeric));
    const double err = std::abs(analytic[i] - numeric);
    res.max_relative_error = std::max(res.max_relative_error, scale < floor ? err / floor : err / scale);
    ++res.checked;
  }
  return res;
}

void sgd_step(RegressionModel& model, std::span<const double> grad, double lr) {
  if (grad.size() != model.weights.size()) throw Error("sgd_step: gradient size mismatch");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double w = static_cast<float>(model.weights[i] - lr * grad[i]);
    if (!std::isfinite(w)) throw Error("sgd_step produced a non-finite weight");
    model.weights[i] = w;
  }
}

namespace {
constexpr std::string_view kMagic = "ALCON-MODEL";
}

void save_model(const RegressionModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << kMagic << '\n'
      << "version=" << kModelFileVersion << '\n'
      << "arch=" << model.arch.describe() << '\n'
      << "seed=" << model.seed << '\n'
      << "count=" << model.weights.size() << '\n';
  std::vector<char> bytes(model.weights.size() * 4);
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    const std::uint32_t u = std::bit_cast<std::uint32_t>(static_cast<float>(model.weights[i]));
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<char>((u >> (8 * b)) & 0xffu);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed: " + path.string());
}

RegressionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const auto header_line = [&](std::string_view key) {
    std::string line;
    if (!std::getline(in, line)) throw Error(path.string() + ": truncated header");
    if (key.empty()) return line;
    if (line.rfind(std::string(key) + "=", 0) != 0)
      throw Error(path.string() + ": corrupt header, expected '" + std::string(key) + "='");
    return line.substr(key.size() + 1);
  };
  if (header_line("") != kMagic) throw Error(path.string() + ": not a model file");
  const std::string version = header_line("version");
  if (version != std::to_string(kModelFileVersion))
    throw Error(path.string() + ": unsupported model file version " + version + " (expected " +
                std::to_string(kModelFileVersion) + ")");
  RegressionModel m;
  try {
    m.arch = Architecture::parse(header_line("arch"));
    m.seed = parse_u64(header_line("seed"), "seed");
    const auto count = parse_u64(header_line("count"), "count");
    if (count != m.arch.param_count()) throw Error(path.string() + ": weight count does not match architecture");
  } catch (const ConfigError& e) {
    throw Error(path.string() + ": corrupt header (" + e.what() + ")");
  }
  std::vector<char> bytes(m.arch.param_count() * 4);
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw Error(path.string() + ": truncated weights");
  if (in.peek() != std::char_traits<char>::eof()) throw Error(path.string() + ": trailing bytes after weights");
  m.weights.resize(m.arch.param_count());
  for (std::size_t i = 0; i < m.weights.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i * 4 + b])) << (8 * b);
    m.weights[i] = std::bit_cast<float>(u);
  }
  return m;
}

}  // namespace alcon::nn
