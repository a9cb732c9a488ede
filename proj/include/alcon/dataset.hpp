#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "alcon/worldgen.hpp"

namespace alcon {

struct DatasetParams {
  int count = 3000;
  // Samples are drawn from a pool of base workspaces, each reused under
  // different disks and augmentations.
  int pool_size = 200;
  WorldParams world = [] {
    WorldParams w;
    w.extent_min_m = 12.0;  // varied extents give the regressor scale diversity
    return w;
  }();
  std::vector<double> K_values{2.0, 5.0, 10.0};

  void validate() const;
};

// One training record. The ON part is the three-disk sample; the ALC part is
// a single disk placed within K of a predicted goal on the same workspace.
struct DatasetEntry {
  TrainingSample on;
  Point alc_predicted;
  Point alc_goal;
  double K = 0.0;
  std::uint64_t seed = 0;

  // Single 255 disk at alc_goal, rebuilt on demand.
  ScoreMap alc_score() const;
};

// Builds workspaces for the whole pool up front; entries are then cheap.
class DatasetGenerator {
 public:
  DatasetGenerator(std::uint64_t master_seed, DatasetParams params);
  DatasetEntry entry(int index) const;
  const DatasetParams& params() const { return params_; }

 private:
  std::uint64_t master_seed_;
  DatasetParams params_;
  std::vector<OccupancyGrid> pool_;
};

// maps/NNNN.pgm, scores/NNNN.pgm, meta/NNNN.txt (gt_x, gt_y, seed, K, ...).
void write_dataset_entry(const std::filesystem::path& dir, int index, const DatasetEntry& e);
DatasetEntry read_dataset_entry(const std::filesystem::path& dir, int index);
int dataset_size(const std::filesystem::path& dir);

// Writes `params.count` entries; returns the number written.
int write_dataset(const std::filesystem::path& dir, std::uint64_t master_seed, const DatasetParams& params,
                  const std::function<void(int)>& progress = {});

// Random-access view used by training; lets tests feed in-memory entries.
struct DatasetSource {
  int size = 0;
  std::function<DatasetEntry(int)> load;

  static DatasetSource from_directory(const std::filesystem::path& dir);
  static DatasetSource from_entries(std::vector<DatasetEntry> entries);
};

}  // namespace alcon
