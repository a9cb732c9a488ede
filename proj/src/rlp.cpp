#include "alcon/rlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "alcon/error.hpp"
#include "alcon/text.hpp"

namespace alcon {

namespace fs = std::filesystem;

std::string_view to_string(MonitorScope s) {
  switch (s) {
    case MonitorScope::On: return "on";
    case MonitorScope::Alc: return "alc";
    case MonitorScope::Both: return "both";
  }
  return "?";
}

MonitorScope parse_monitor_scope(std::string_view text) {
  if (text == "on") return MonitorScope::On;
  if (text == "alc") return MonitorScope::Alc;
  if (text == "both") return MonitorScope::Both;
  throw ConfigError("rlp.monitor", "expected on, alc or both, got '" + std::string(text) + "'");
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::On: return "on";
    case Variant::Alc: return "alc";
    case Variant::Ours: return "ours";
  }
  return "?";
}

void RlpConfig::validate() const {
  if (!(w_M >= 0.0 && w_M <= 1.0)) throw ConfigError("w_M", "must lie in [0,1]");
  if (!(G_m > 0.0)) throw ConfigError("G_m", "must be positive");
  if (!(K_max_m > 0.0)) throw ConfigError("K_max_m", "must be positive");
  if (!(w_alc_min >= 0.0 && w_alc_min <= 1.0)) throw ConfigError("w_alc_min", "must lie in [0,1]");
  if (!(w_alc_max >= w_alc_min && w_alc_max <= 1.0)) throw ConfigError("w_alc_max", "must lie in [w_alc_min,1]");
  if (!(expand_margin_m >= 0.0)) throw ConfigError("rlp.expand_margin_m", "must be non-negative");
  if (!(tfp.nms_radius_m >= 0.0)) throw ConfigError("tfp.nms_radius_m", "must be non-negative");
  if (!(tfp.disk_radius_m > 0.0)) throw ConfigError("tfp.disk_radius_m", "must be positive");
  if (tfp.max_peaks < 1 || tfp.max_peaks > static_cast<int>(kRankScores.size()))
    throw ConfigError("tfp.max_peaks", "must be between 1 and 3");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate", "must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("gamma", "must lie in [0,1)");
  if (!(k >= 0.0)) throw ConfigError("k", "must be non-negative");
  if (batch_size < 1) throw ConfigError("train.batch_size", "must be positive");
  if (epochs < 1) throw ConfigError("train.epochs", "must be positive");
  if (downsample < 1 || kModelInputSize % downsample != 0)
    throw ConfigError("train.downsample", "must be a positive divisor of 240");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0))
    throw ConfigError("train.holdout_fraction", "must lie in [0,1)");
  if (!(oracle_step_m > 0.0)) throw ConfigError("train.oracle_step_m", "must be positive");
}

double loss_euclid(Point predicted, Point gt) { return distance(predicted, gt); }

double reward_from_loss(double E) {
  if (!(E >= 0.0)) throw Error("reward_from_loss: loss must be non-negative");
  return 1.0 / (1.0 + E);
}

double advantage(double R, double V_s, double V_next, double gamma) { return R + gamma * V_next - V_s; }

double critic_loss(double A, double V_pred, double V_oracle, double k) {
  if (!(k >= 0.0)) throw Error("critic_loss: k must be non-negative");
  return A * A + k * std::abs(V_pred - V_oracle);
}

double w_alc(double K, const RlpConfig& cfg) {
  return std::clamp(1.0 - K / cfg.K_max_m, cfg.w_alc_min, cfg.w_alc_max);
}

Point monitor_fuse(Point p_M, Point p_I, double G_m, double w_M) {
  if (distance(p_M, p_I) > G_m) return p_M * w_M + p_I * (1.0 - w_M);
  return p_M;
}

namespace {

bool in_bounds(const std::optional<Point>& p, const GridGeometry& g) {
  return p && std::isfinite(p->x) && std::isfinite(p->y) && g.contains(*p);
}

}  // namespace

SubgoalProposal alc_on_fuse(std::optional<Point> p_alc, std::optional<Point> p_on, double K,
                            const FrontierSet& frontiers, const GridGeometry& bounds, const RlpConfig& cfg, Rng& rng,
                            FusionTrace* trace) {
  FusionTrace local;
  FusionTrace& t = trace ? *trace : local;
  t = {};
  t.alc_valid = in_bounds(p_alc, bounds);
  t.on_valid = in_bounds(p_on, bounds);

  if (!t.alc_valid && !t.on_valid) {
    t.rf_fallback = true;
    if (frontiers.empty()) return {{}, 0.0, PlannerSource::RF, false};
    return rf_plan(frontiers, bounds, rng);
  }

  PlannerSource source;
  if (t.alc_valid && t.on_valid) {
    t.weight = w_alc(K, cfg);
    t.blended = *p_alc * t.weight + *p_on * (1.0 - t.weight);
    source = PlannerSource::FUSED;
  } else if (t.alc_valid) {
    t.weight = 1.0;
    t.blended = *p_alc;
    source = PlannerSource::RLP_ALC;
  } else {
    t.weight = 0.0;
    t.blended = *p_on;
    source = PlannerSource::RLP_ON;
  }

  if (frontiers.empty()) return {t.blended, 0.0, source, true};
  const Cell c = nearest_frontier(t.blended, frontiers, bounds);
  return {bounds.cell_center(c), 0.0, source, true};
}

ModelInput on_model_input(const ScoreMap& clean, const BoundingBox& mapped_box, int size) {
  return encode_model_input(clean, mapped_box, size);
}

AlcCrop alc_crop(const GridGeometry& geometry, Point predicted_goal, const BoundingBox& mapped_box, double margin_m) {
  const int m = margin_cells(margin_m, geometry.resolution);
  AlcCrop out{expand_map(ScoreMap(geometry, 0), margin_m), {}};
  stamp_disk(out.map, predicted_goal, kDiskRadiusM, 255);
  const GridGeometry& eg = out.map.geometry();

  const BoundingBox shifted{{mapped_box.min.row + m, mapped_box.min.col + m},
                            {mapped_box.max.row + m, mapped_box.max.col + m}};
  out.box = grow(shifted, m, eg);

  // Keep the whole disk in view even when the prediction lies off the map.
  const int rr = static_cast<int>(std::ceil(kDiskRadiusM / eg.resolution));
  const Cell pc = eg.world_to_cell(predicted_goal);
  BoundingBox disk{{std::clamp(pc.row - rr, 0, eg.height - 1), std::clamp(pc.col - rr, 0, eg.width - 1)},
                   {std::clamp(pc.row + rr, 0, eg.height - 1), std::clamp(pc.col + rr, 0, eg.width - 1)}};
  out.box = unite(out.box, disk);
  return out;
}

namespace {

const char* const kModelFiles[4] = {"on_actor.bin", "on_critic.bin", "alc_actor.bin", "alc_critic.bin"};

void check_head(const nn::RegressionModel& m, int head, const fs::path& path) {
  if (m.head_dim() != head)
    throw Error(path.string() + ": expected a model with " + std::to_string(head) + " outputs, got " +
                std::to_string(m.head_dim()));
  const nn::Shape in = m.arch.input_shape();
  if (in.c != 1 || in.h != kModelInputSize || in.w != kModelInputSize)
    throw Error(path.string() + ": model input must be 1x240x240");
}

}  // namespace

void save_dual(const DualPlanner& dual, const fs::path& dir) {
  fs::create_directories(dir);
  nn::save_model(dual.on.actor, dir / kModelFiles[0]);
  nn::save_model(dual.on.critic, dir / kModelFiles[1]);
  nn::save_model(dual.alc.actor, dir / kModelFiles[2]);
  nn::save_model(dual.alc.critic, dir / kModelFiles[3]);
}

bool dual_files_present(const fs::path& dir) {
  return std::all_of(std::begin(kModelFiles), std::end(kModelFiles),
                     [&](const char* f) { return fs::is_regular_file(dir / f); });
}

DualPlanner load_dual(const fs::path& dir, const RlpConfig& cfg) {
  for (const char* f : kModelFiles)
    if (!fs::is_regular_file(dir / f)) throw Error("missing model file " + (dir / f).string());
  DualPlanner d;
  d.on.actor = nn::load_model(dir / kModelFiles[0]);
  d.on.critic = nn::load_model(dir / kModelFiles[1]);
  d.alc.actor = nn::load_model(dir / kModelFiles[2]);
  d.alc.critic = nn::load_model(dir / kModelFiles[3]);
  check_head(d.on.actor, 2, dir / kModelFiles[0]);
  check_head(d.on.critic, 1, dir / kModelFiles[1]);
  check_head(d.alc.actor, 2, dir / kModelFiles[2]);
  check_head(d.alc.critic, 1, dir / kModelFiles[3]);
  d.cfg = cfg;
  return d;
}

double oracle_value(const OccupancyGrid& grid, const ScoreMap& score, Point start, Point goal, double gamma,
                    double step_m) {
  const GridGeometry& g = grid.geometry();
  const Cell a = g.world_to_cell(start);
  const Cell b = g.world_to_cell(goal);
  const auto path = dijkstra(grid, a, b, false);
  if (!path) throw Error("oracle_value: goal unreachable from start");

  std::vector<Point> pts{g.cell_center(a)};
  for (const Cell& c : path->cells) pts.push_back(g.cell_center(c));

  double value = 0.0, discount = 1.0, travelled = 0.0, next_sample = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0) travelled += distance(pts[i - 1], pts[i]);
    const bool last = i + 1 == pts.size();
    if (travelled + 1e-9 >= next_sample || last) {
      value += discount * reward_at(pts[i], score);
      discount *= gamma;
      next_sample = travelled + step_m;
    }
  }
  return value;
}

std::string train_log_csv(const TrainReport& r) {
  std::ostringstream out;
  out << "epoch,E_on,E_alc,advantage_on,advantage_alc,critic_loss_on,critic_loss_alc,holdout_E_on,holdout_E_alc,"
         "random_E_on,random_E_alc\n";
  for (const EpochStats& e : r.epochs) {
    out << e.epoch << ',' << format_double(e.E_on) << ',' << format_double(e.E_alc) << ','
        << format_double(e.advantage_on) << ',' << format_double(e.advantage_alc) << ','
        << format_double(e.critic_loss_on) << ',' << format_double(e.critic_loss_alc) << ','
        << format_double(e.holdout_E_on) << ',' << format_double(e.holdout_E_alc) << ','
        << format_double(r.random_E_on) << ',' << format_double(r.random_E_alc) << '\n';
  }
  return out.str();
}

namespace {

struct BranchSample {
  std::vector<std::uint8_t> levels;
  CropTransform transform;
  Point gt;
  double v_oracle = 0.0;
};

struct CachedSample {
  BranchSample on;
  BranchSample alc;
};

CachedSample cache_entry(const DatasetEntry& e, const TrainConfig& cfg, const RlpConfig& rlp) {
  const std::string problem = validate_sample(e.on);
  if (!problem.empty()) throw Error("invalid training sample: " + problem);
  const OccupancyGrid& grid = e.on.obstacle;
  const GridGeometry& g = grid.geometry();
  const BoundingBox ws = mapped_bounding_box(grid);

  CachedSample c;
  c.on.levels = crop_resize_levels(e.on.score, ws, kModelInputSize);
  c.on.transform = {ws, g};
  c.on.gt = e.on.gt_subgoal;

  const AlcCrop crop = alc_crop(g, e.alc_goal, ws, rlp.expand_margin_m);
  c.alc.levels = crop_resize_levels(crop.map, crop.box, kModelInputSize);
  c.alc.transform = {crop.box, crop.map.geometry()};
  c.alc.gt = e.alc_goal;

  Rng rng(derive_seed(e.seed, Stream::kOracle));
  const auto cells = free_cells(grid);
  const Point start = g.cell_center(cells[uniform_index(rng, cells.size())]);
  c.on.v_oracle = oracle_value(grid, e.on.score, start, c.on.gt, cfg.gamma, cfg.oracle_step_m);
  c.alc.v_oracle = oracle_value(grid, e.alc_score(), start, c.alc.gt, cfg.gamma, cfg.oracle_step_m);
  return c;
}

std::vector<double> to_input(const std::vector<std::uint8_t>& levels) {
  std::vector<double> x(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) x[i] = levels[i] / 255.0;
  return x;
}

struct BranchStep {
  double E = 0.0;
  double A = 0.0;
  double critic_loss = 0.0;
};

// Accumulates the actor and critic gradients of one sample.
BranchStep branch_step(const ActorCritic& ac, const BranchSample& s, const TrainConfig& cfg,
                       std::vector<double>& actor_grad, std::vector<double>& critic_grad) {
  const auto x = to_input(s.levels);
  const nn::Tape at = nn::forward_tape(ac.actor, x);
  const Point p = s.transform.decode(at.output()[0], at.output()[1]);
  BranchStep r;
  r.E = loss_euclid(p, s.gt);

  const nn::Tape ct = nn::forward_tape(ac.critic, x);
  const double V = ct.output()[0];
  const double R = reward_from_loss(r.E);
  // The regressor acts once per input, so the successor value is the
  // current estimate held fixed (semi-gradient).
  r.A = advantage(R, V, V, cfg.gamma);
  r.critic_loss = critic_loss(r.A, V, s.v_oracle, cfg.k);
  const double sign = V > s.v_oracle ? 1.0 : (V < s.v_oracle ? -1.0 : 0.0);
  const double dV = -2.0 * r.A + cfg.k * sign;
  nn::accumulate_gradient(ac.critic, ct, std::span<const double>(&dV, 1), critic_grad);

  if (r.E > 0.0) {
    const double w = cfg.advantage_weighting ? std::max(r.A, 0.0) : 1.0;
    const double d[2] = {w * (p.x - s.gt.x) / r.E * s.transform.extent_x(),
                         w * (p.y - s.gt.y) / r.E * s.transform.extent_y()};
    nn::accumulate_gradient(ac.actor, at, d, actor_grad);
  }
  return r;
}

double predict_error(const nn::RegressionModel& actor, const BranchSample& s) {
  const auto out = nn::forward(actor, to_input(s.levels));
  return loss_euclid(s.transform.decode(out[0], out[1]), s.gt);
}

}  // namespace

TrainResult train_dual(const DatasetSource& data, const TrainConfig& cfg, const RlpConfig& rlp,
                       const std::function<void(const EpochStats&)>& on_epoch) {
  cfg.validate();
  rlp.validate();
  if (data.size <= 0) throw Error("empty dataset");

  std::vector<CachedSample> cache;
  cache.reserve(static_cast<std::size_t>(data.size));
  for (int i = 0; i < data.size; ++i) cache.push_back(cache_entry(data.load(i), cfg, rlp));

  std::vector<std::size_t> order(cache.size());
  std::iota(order.begin(), order.end(), 0);
  {
    Rng rng(derive_seed(cfg.seed, Stream::kShuffle, 0));
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::size_t n_hold = static_cast<std::size_t>(std::floor(cfg.holdout_fraction * static_cast<double>(cache.size())));
  if (n_hold >= cache.size()) n_hold = cache.size() - 1;
  const std::vector<std::size_t> holdout(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_hold));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_hold), order.end());

  TrainResult result;
  DualPlanner& dual = result.dual;
  dual.cfg = rlp;
  const auto actor_arch = nn::default_architecture(2, cfg.downsample);
  const auto critic_arch = nn::default_architecture(1, cfg.downsample);
  ActorCritic* branches[2] = {&dual.on, &dual.alc};
  for (std::uint64_t b = 0; b < 2; ++b) {
    branches[b]->actor = nn::make_model(actor_arch, derive_seed(cfg.seed, Stream::kInit, 2 * b));
    branches[b]->critic = nn::make_model(critic_arch, derive_seed(cfg.seed, Stream::kInit, 2 * b + 1));
    branches[b]->actor.seed = cfg.seed;
    branches[b]->critic.seed = cfg.seed;
  }

  TrainReport& report = result.report;
  report.train_samples = static_cast<int>(train.size());
  report.holdout_samples = static_cast<int>(holdout.size());
  for (std::size_t idx : holdout) {
    Rng rng(derive_seed(cfg.seed, Stream::kBaseline, idx));
    const CachedSample& c = cache[idx];
    const double u = uniform01(rng), v = uniform01(rng);
    report.random_E_on += loss_euclid(c.on.transform.decode(u, v), c.on.gt);
    const double ua = uniform01(rng), va = uniform01(rng);
    report.random_E_alc += loss_euclid(c.alc.transform.decode(ua, va), c.alc.gt);
  }
  if (!holdout.empty()) {
    report.random_E_on /= static_cast<double>(holdout.size());
    report.random_E_alc /= static_cast<double>(holdout.size());
  }

  std::vector<double> grads[4];
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    {
      Rng rng(derive_seed(cfg.seed, Stream::kShuffle, static_cast<std::uint64_t>(epoch)));
      std::shuffle(train.begin(), train.end(), rng);
    }
    EpochStats st;
    st.epoch = epoch;
    for (std::size_t start = 0; start < train.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(train.size(), start + static_cast<std::size_t>(cfg.batch_size));
      grads[0].assign(dual.on.actor.weights.size(), 0.0);
      grads[1].assign(dual.on.critic.weights.size(), 0.0);
      grads[2].assign(dual.alc.actor.weights.size(), 0.0);
      grads[3].assign(dual.alc.critic.weights.size(), 0.0);
      for (std::size_t i = start; i < end; ++i) {
        const CachedSample& c = cache[train[i]];
        const BranchStep on = branch_step(dual.on, c.on, cfg, grads[0], grads[1]);
        const BranchStep alc = branch_step(dual.alc, c.alc, cfg, grads[2], grads[3]);
        st.E_on += on.E;
        st.E_alc += alc.E;
        st.advantage_on += on.A;
        st.advantage_alc += alc.A;
        st.critic_loss_on += on.critic_loss;
        st.critic_loss_alc += alc.critic_loss;
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (auto& g : grads)
        for (double& v : g) v *= scale;
      nn::sgd_step(dual.on.actor, grads[0], cfg.learning_rate);
      nn::sgd_step(dual.on.critic, grads[1], cfg.learning_rate);
      nn::sgd_step(dual.alc.actor, grads[2], cfg.learning_rate);
      nn::sgd_step(dual.alc.critic, grads[3], cfg.learning_rate);
    }
    const double n = static_cast<double>(train.size());
    st.E_on /= n;
    st.E_alc /= n;
    st.advantage_on /= n;
    st.advantage_alc /= n;
    st.critic_loss_on /= n;
    st.critic_loss_alc /= n;
    for (std::size_t idx : holdout) {
      st.holdout_E_on += predict_error(dual.on.actor, cache[idx].on);
      st.holdout_E_alc += predict_error(dual.alc.actor, cache[idx].alc);
    }
    if (!holdout.empty()) {
      st.holdout_E_on /= static_cast<double>(holdout.size());
      st.holdout_E_alc /= static_cast<double>(holdout.size());
    }
    report.epochs.push_back(st);
    if (on_epoch) on_epoch(st);
  }
  return result;
}

SubgoalProposal plan_dual(Variant variant, const ScoreMap& observed_score, const OccupancyGrid& observed,
                          Point predicted_goal, double K, const DualPlanner& dual, const FrontierSet& frontiers,
                          Rng& rng, PlanTrace* trace) {
  PlanTrace local;
  PlanTrace& t = trace ? *trace : local;
  t = {};
  const RlpConfig& cfg = dual.cfg;
  const GridGeometry& g = observed.geometry();

  std::optional<BoundingBox> box;
  try {
    box = mapped_bounding_box(observed);
  } catch (const Error&) {
  }

  const bool use_on = variant != Variant::Alc;
  const bool use_alc = variant != Variant::On;
  const bool monitor_on = cfg.monitor != MonitorScope::Alc;
  const bool monitor_alc = cfg.monitor != MonitorScope::On;

  TfpResult tfp;
  if (box && (use_on || monitor_alc)) {
    tfp = tfp_plan(observed_score, cfg.tfp);
    if (tfp.proposal.valid) t.p_M = tfp.proposal.point;
  }

  // With no scored cell observed the ON input is blank and its regression
  // carries no information, so the branch is reported invalid.
  if (box && use_on && t.p_M) {
    const ModelInput in = on_model_input(tfp.clean, *box);
    const auto out = nn::forward(dual.on.actor, in);
    t.p_I = in.transform.decode(out[0], out[1]);
    t.p_on = monitor_on ? monitor_fuse(*t.p_M, *t.p_I, cfg.G_m, cfg.w_M) : *t.p_I;
  }
  if (box && use_alc) {
    const AlcCrop crop = alc_crop(g, predicted_goal, *box, cfg.expand_margin_m);
    const ModelInput in = encode_model_input(crop.map, crop.box);
    const auto out = nn::forward(dual.alc.actor, in);
    t.p_alc = in.transform.decode(out[0], out[1]);
    if (monitor_alc && t.p_M) t.p_alc = monitor_fuse(*t.p_M, *t.p_alc, cfg.G_m, cfg.w_M);
  }
  return alc_on_fuse(t.p_alc, t.p_on, K, frontiers, g, cfg, rng, &t.fusion);
}

SubgoalProposal LearnedPlanner::plan(const PlanContext& ctx, Rng& rng) const {
  return plan_dual(variant_, ctx.state.observed_score, ctx.state.observed, ctx.predicted_goal, ctx.K, dual_,
                   ctx.frontiers, rng);
}

}  // namespace alcon
