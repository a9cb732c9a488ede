#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "alcon/dataset.hpp"
#include "alcon/eval.hpp"
#include "alcon/rlp.hpp"
#include "alcon/sim.hpp"
#include "alcon/worldgen.hpp"

namespace alcon {

// Every tunable of the pipeline, addressable as flat key=value text.
// Grid, FOV and seed keys are written once and copied into the module
// configs by resolve().
struct RunConfig {
  std::uint64_t seed = 1;
  int grid_width = 480;
  int grid_height = 480;
  double grid_resolution_m = 0.1;

  WorldParams world{};       // benchmark worlds
  DatasetParams dataset{};   // training worlds
  CueParams cues{};
  SimConfig sim{};
  RlpConfig rlp{};
  TrainConfig train{};
  BenchmarkConfig bench{};

  std::string dataset_dir;  // paths.dataset
  std::string models_dir;   // paths.models

  // Sets a key from text; unknown keys and malformed values raise ConfigError.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static std::vector<std::string> keys();

  // Pushes shared settings (seed, grid, sim) into the sub-configs.
  void resolve();
  // resolve() then validate every section.
  void validate();

  // Fully resolved dump, one key=value per line in a fixed order.
  std::string dump() const;

  static RunConfig parse(std::string_view text, const std::string& origin = "<config>");
  static RunConfig load(const std::filesystem::path& path);
};

}  // namespace alcon
