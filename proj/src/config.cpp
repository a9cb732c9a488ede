#include "alcon/config.hpp"

#include <functional>
#include <limits>

#include "alcon/error.hpp"
#include "alcon/text.hpp"

namespace alcon {

namespace {

struct Binding {
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

std::vector<double> parse_doubles(std::string_view text, std::string_view key) {
  std::vector<double> out;
  for (const auto& part : split(text, ',')) out.push_back(parse_double(part, key));
  return out;
}

std::string join_strings(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

int parse_int32(std::string_view text, std::string_view key) {
  const long long v = parse_int(text, key);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw ConfigError(std::string(key), "out of range");
  return static_cast<int>(v);
}

// Accessors are written as lambdas returning a reference into the config.
template <typename Access>
Binding dbl(const char* key, Access acc) {
  return {key, [acc](const RunConfig& c) { return format_double(acc(const_cast<RunConfig&>(c))); },
          [acc, key](RunConfig& c, std::string_view v) { acc(c) = parse_double(v, key); }};
}

template <typename Access>
Binding integer(const char* key, Access acc) {
  return {key, [acc](const RunConfig& c) { return std::to_string(acc(const_cast<RunConfig&>(c))); },
          [acc, key](RunConfig& c, std::string_view v) { acc(c) = parse_int32(v, key); }};
}

template <typename Access>
Binding boolean(const char* key, Access acc) {
  return {key, [acc](const RunConfig& c) { return std::string(acc(const_cast<RunConfig&>(c)) ? "true" : "false"); },
          [acc, key](RunConfig& c, std::string_view v) { acc(c) = parse_bool(v, key); }};
}

template <typename Access>
Binding doubles(const char* key, Access acc) {
  return {key, [acc](const RunConfig& c) { return join_doubles(acc(const_cast<RunConfig&>(c))); },
          [acc, key](RunConfig& c, std::string_view v) { acc(c) = parse_doubles(v, key); }};
}

template <typename Access>
Binding text(const char* key, Access acc) {
  return {key, [acc](const RunConfig& c) { return acc(const_cast<RunConfig&>(c)); },
          [acc](RunConfig& c, std::string_view v) { acc(c) = std::string(trim(v)); }};
}

#define ALCON_FIELD(expr) [](RunConfig & c) -> auto& { return c.expr; }

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> b;
    b.push_back({"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, std::string_view v) { c.seed = parse_u64(v, "seed"); }});
    b.push_back(integer("grid.width", ALCON_FIELD(grid_width)));
    b.push_back(integer("grid.height", ALCON_FIELD(grid_height)));
    b.push_back(dbl("grid.resolution_m", ALCON_FIELD(grid_resolution_m)));

    b.push_back(dbl("fov.radius_m", ALCON_FIELD(sim.fov.radius_m)));
    b.push_back(dbl("fov.angle_deg", ALCON_FIELD(sim.fov.angle_deg)));

    b.push_back(dbl("world.extent_min_m", ALCON_FIELD(world.extent_min_m)));
    b.push_back(dbl("world.extent_max_m", ALCON_FIELD(world.extent_max_m)));
    b.push_back(integer("world.rooms_min", ALCON_FIELD(world.rooms_min)));
    b.push_back(integer("world.rooms_max", ALCON_FIELD(world.rooms_max)));
    b.push_back(dbl("world.door_min_m", ALCON_FIELD(world.door_min_m)));
    b.push_back(dbl("world.door_max_m", ALCON_FIELD(world.door_max_m)));
    b.push_back(dbl("world.min_room_m", ALCON_FIELD(world.min_room_m)));
    b.push_back(dbl("world.wall_thickness_m", ALCON_FIELD(world.wall_thickness_m)));
    b.push_back(dbl("world.obstacle_density", ALCON_FIELD(world.obstacle_density)));

    b.push_back(integer("dataset.count", ALCON_FIELD(dataset.count)));
    b.push_back(integer("dataset.pool_size", ALCON_FIELD(dataset.pool_size)));
    b.push_back(doubles("dataset.K_values", ALCON_FIELD(dataset.K_values)));
    b.push_back(dbl("dataset.extent_min_m", ALCON_FIELD(dataset.world.extent_min_m)));
    b.push_back(dbl("dataset.extent_max_m", ALCON_FIELD(dataset.world.extent_max_m)));

    b.push_back(dbl("cue.near_min_m", ALCON_FIELD(cues.near_min_m)));
    b.push_back(dbl("cue.near_max_m", ALCON_FIELD(cues.near_max_m)));
    b.push_back(dbl("cue.far_min_m", ALCON_FIELD(cues.far_min_m)));
    b.push_back(dbl("cue.far_max_m", ALCON_FIELD(cues.far_max_m)));
    b.push_back(dbl("cue.disk_radius_m", ALCON_FIELD(cues.disk_radius_m)));

    b.push_back(dbl("sim.success_radius_m", ALCON_FIELD(sim.success_radius_m)));
    b.push_back(integer("sim.S", ALCON_FIELD(sim.S)));
    b.push_back(integer("sim.step_budget", ALCON_FIELD(sim.step_budget)));
    b.push_back(integer("sim.max_moves_per_round", ALCON_FIELD(sim.max_moves_per_round)));
    b.push_back(boolean("sim.scan_on_arrival", ALCON_FIELD(sim.scan_on_arrival)));
    b.push_back(dbl("sim.reward_radius_m", ALCON_FIELD(sim.reward_radius_m)));
    b.push_back(dbl("sim.reward_scale", ALCON_FIELD(sim.reward_scale)));

    b.push_back(dbl("tfp.disk_radius_m", ALCON_FIELD(rlp.tfp.disk_radius_m)));
    b.push_back(dbl("tfp.nms_radius_m", ALCON_FIELD(rlp.tfp.nms_radius_m)));
    b.push_back(integer("tfp.max_peaks", ALCON_FIELD(rlp.tfp.max_peaks)));

    b.push_back(dbl("w_M", ALCON_FIELD(rlp.w_M)));
    b.push_back(dbl("G_m", ALCON_FIELD(rlp.G_m)));
    b.push_back(dbl("K_max_m", ALCON_FIELD(rlp.K_max_m)));
    b.push_back(dbl("w_alc_min", ALCON_FIELD(rlp.w_alc_min)));
    b.push_back(dbl("w_alc_max", ALCON_FIELD(rlp.w_alc_max)));
    b.push_back(dbl("rlp.expand_margin_m", ALCON_FIELD(rlp.expand_margin_m)));
    b.push_back({"rlp.monitor", [](const RunConfig& c) { return std::string(to_string(c.rlp.monitor)); },
                 [](RunConfig& c, std::string_view v) { c.rlp.monitor = parse_monitor_scope(trim(v)); }});

    b.push_back(dbl("k", ALCON_FIELD(train.k)));
    b.push_back(dbl("gamma", ALCON_FIELD(train.gamma)));
    b.push_back(boolean("advantage_weighting", ALCON_FIELD(train.advantage_weighting)));
    b.push_back(dbl("train.learning_rate", ALCON_FIELD(train.learning_rate)));
    b.push_back(integer("train.batch_size", ALCON_FIELD(train.batch_size)));
    b.push_back(integer("train.epochs", ALCON_FIELD(train.epochs)));
    b.push_back(integer("train.downsample", ALCON_FIELD(train.downsample)));
    b.push_back(dbl("train.holdout_fraction", ALCON_FIELD(train.holdout_fraction)));
    b.push_back(dbl("train.oracle_step_m", ALCON_FIELD(train.oracle_step_m)));

    b.push_back(integer("bench.episodes", ALCON_FIELD(bench.episodes)));
    b.push_back({"bench.planners", [](const RunConfig& c) { return join_strings(c.bench.planners); },
                 [](RunConfig& c, std::string_view v) { c.bench.planners = split(v, ','); }});
    b.push_back(doubles("bench.K_values", ALCON_FIELD(bench.K_values)));
    b.push_back(dbl("bench.min_separation_m", ALCON_FIELD(bench.min_separation_m)));
    b.push_back(integer("bench.threads", ALCON_FIELD(bench.threads)));
    b.push_back(boolean("bench.write_logs", ALCON_FIELD(bench.write_logs)));

    b.push_back(text("paths.dataset", ALCON_FIELD(dataset_dir)));
    b.push_back(text("paths.models", ALCON_FIELD(models_dir)));
    return b;
  }();
  return table;
}

#undef ALCON_FIELD

const Binding& find(std::string_view key) {
  for (const auto& b : bindings())
    if (key == b.key) return b;
  throw ConfigError(std::string(key), "unknown configuration key");
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) { find(trim(key)).set(*this, value); }

std::string RunConfig::get(std::string_view key) const { return find(trim(key)).get(*this); }

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& b : bindings()) out.emplace_back(b.key);
  return out;
}

void RunConfig::resolve() {
  for (WorldParams* w : {&world, &dataset.world}) {
    w->canvas_width = grid_width;
    w->canvas_height = grid_height;
    w->resolution = grid_resolution_m;
  }
  train.seed = seed;
  bench.seed = seed;
  bench.world = world;
  bench.cues = cues;
  bench.sim = sim;
  bench.tfp = rlp.tfp;
}

void RunConfig::validate() {
  resolve();
  if (grid_width <= 0) throw ConfigError("grid.width", "must be positive");
  if (grid_height <= 0) throw ConfigError("grid.height", "must be positive");
  if (!(grid_resolution_m > 0.0)) throw ConfigError("grid.resolution_m", "must be positive");
  if (!(cues.disk_radius_m > 0.0)) throw ConfigError("cue.disk_radius_m", "must be positive");
  if (!(cues.near_min_m >= 0.0 && cues.near_max_m >= cues.near_min_m))
    throw ConfigError("cue.near_max_m", "need 0 <= near_min_m <= near_max_m");
  if (!(cues.far_min_m >= 0.0 && cues.far_max_m >= cues.far_min_m))
    throw ConfigError("cue.far_max_m", "need 0 <= far_min_m <= far_max_m");
  world.validate();
  dataset.validate();
  sim.validate();
  rlp.validate();
  train.validate();
  bench.validate();
}

std::string RunConfig::dump() const {
  RunConfig c = *this;
  c.resolve();
  std::string out;
  for (const auto& b : bindings()) out += std::string(b.key) + "=" + b.get(c) + "\n";
  return out;
}

RunConfig RunConfig::parse(std::string_view text, const std::string& origin) {
  RunConfig c;
  for (const auto& [k, v] : parse_key_values(text, origin)) c.set(k, v);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) { return parse(read_text_file(path), path.string()); }

}  // namespace alcon
