#include "alcon/dataset.hpp"

#include <cstdio>
#include <memory>

#include "alcon/error.hpp"
#include "alcon/pgm.hpp"
#include "alcon/text.hpp"

namespace alcon {

namespace fs = std::filesystem;

void DatasetParams::validate() const {
  if (count <= 0) throw ConfigError("dataset.count", "must be positive");
  if (pool_size <= 0) throw ConfigError("dataset.pool_size", "must be positive");
  if (K_values.empty()) throw ConfigError("dataset.K_values", "need at least one value");
  for (double K : K_values)
    if (!(K >= 0.0)) throw ConfigError("dataset.K_values", "K must be non-negative");
  world.validate();
}

ScoreMap DatasetEntry::alc_score() const {
  ScoreMap s(on.obstacle.geometry(), 0);
  stamp_disk(s, alc_goal, kDiskRadiusM, 255);
  return s;
}

DatasetGenerator::DatasetGenerator(std::uint64_t master_seed, DatasetParams params)
    : master_seed_(master_seed), params_(std::move(params)) {
  params_.validate();
  pool_.reserve(static_cast<std::size_t>(params_.pool_size));
  for (int i = 0; i < params_.pool_size; ++i)
    pool_.push_back(gen_workspace(derive_seed(master_seed_, Stream::kPool, static_cast<std::uint64_t>(i)), params_.world));
}

DatasetEntry DatasetGenerator::entry(int index) const {
  const std::uint64_t seed = derive_seed(master_seed_, Stream::kSample, static_cast<std::uint64_t>(index));
  const OccupancyGrid& base = pool_[static_cast<std::size_t>(index % params_.pool_size)];

  const TrainingSample raw = gen_on_scoremap(base, seed);
  const AugmentedPair aug = augment(base, raw.score, seed);
  DatasetEntry e;
  e.on = {aug.score, aug.grid, aug.op.apply(raw.gt_subgoal, base.geometry())};
  e.seed = seed;

  Rng rng(derive_seed(seed, Stream::kAlc, 1));
  e.K = params_.K_values[uniform_index(rng, params_.K_values.size())];
  const auto cells = free_cells(e.on.obstacle);
  e.alc_predicted = e.on.obstacle.geometry().cell_center(cells[uniform_index(rng, cells.size())]);
  e.alc_goal = gen_alc_scoremap(e.on.obstacle, e.alc_predicted, e.K, seed).true_goal;
  return e;
}

namespace {

std::string stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d", index);
  return buf;
}

}  // namespace

void write_dataset_entry(const fs::path& dir, int index, const DatasetEntry& e) {
  const std::string s = stem(index);
  for (const char* sub : {"maps", "scores", "meta"}) fs::create_directories(dir / sub);
  write_occupancy_pgm(e.on.obstacle, dir / "maps" / (s + ".pgm"));
  write_score_pgm(e.on.score, dir / "scores" / (s + ".pgm"));
  std::string meta;
  const auto put = [&](const char* k, const std::string& v) { meta += std::string(k) + "=" + v + "\n"; };
  put("gt_x", format_double(e.on.gt_subgoal.x));
  put("gt_y", format_double(e.on.gt_subgoal.y));
  put("seed", std::to_string(e.seed));
  put("K", format_double(e.K));
  put("predicted_x", format_double(e.alc_predicted.x));
  put("predicted_y", format_double(e.alc_predicted.y));
  put("alc_goal_x", format_double(e.alc_goal.x));
  put("alc_goal_y", format_double(e.alc_goal.y));
  write_text_file(dir / "meta" / (s + ".txt"), meta);
}

DatasetEntry read_dataset_entry(const fs::path& dir, int index) {
  const std::string s = stem(index);
  DatasetEntry e;
  e.on.obstacle = read_occupancy_pgm(dir / "maps" / (s + ".pgm"));
  e.on.score = read_score_pgm(dir / "scores" / (s + ".pgm"));
  const fs::path meta_path = dir / "meta" / (s + ".txt");
  const KeyValues kv = read_key_values(meta_path);
  const auto get = [&](const std::string& k) -> const std::string& {
    const auto it = kv.find(k);
    if (it == kv.end()) throw Error(meta_path.string() + ": missing key " + k);
    return it->second;
  };
  e.on.gt_subgoal = {parse_double(get("gt_x"), "gt_x"), parse_double(get("gt_y"), "gt_y")};
  e.seed = parse_u64(get("seed"), "seed");
  e.K = parse_double(get("K"), "K");
  e.alc_predicted = {parse_double(get("predicted_x"), "predicted_x"), parse_double(get("predicted_y"), "predicted_y")};
  e.alc_goal = {parse_double(get("alc_goal_x"), "alc_goal_x"), parse_double(get("alc_goal_y"), "alc_goal_y")};
  if (e.on.obstacle.geometry() != e.on.score.geometry())
    throw Error(dir.string() + ": sample " + s + " has mismatched map and score geometry");
  return e;
}

int dataset_size(const fs::path& dir) {
  if (!fs::is_directory(dir / "meta")) throw Error(dir.string() + ": not a dataset directory (no meta/)");
  int n = 0;
  while (fs::exists(dir / "meta" / (stem(n) + ".txt"))) ++n;
  return n;
}

int write_dataset(const fs::path& dir, std::uint64_t master_seed, const DatasetParams& params,
                  const std::function<void(int)>& progress) {
  const DatasetGenerator gen(master_seed, params);
  for (int i = 0; i < params.count; ++i) {
    write_dataset_entry(dir, i, gen.entry(i));
    if (progress) progress(i + 1);
  }
  return params.count;
}

DatasetSource DatasetSource::from_directory(const fs::path& dir) {
  return {dataset_size(dir), [dir](int i) { return read_dataset_entry(dir, i); }};
}

DatasetSource DatasetSource::from_entries(std::vector<DatasetEntry> entries) {
  auto shared = std::make_shared<const std::vector<DatasetEntry>>(std::move(entries));
  return {static_cast<int>(shared->size()), [shared](int i) { return shared->at(static_cast<std::size_t>(i)); }};
}

}  // namespace alcon
