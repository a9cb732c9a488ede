#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "alcon/rlp.hpp"
#include "alcon/sim.hpp"
#include "alcon/worldgen.hpp"

namespace alcon {

// (1/N) sum S_i * l_i / max(p_i, l_i). Throws on an empty list or l_i <= 0.
double spl(std::span<const EpisodeOutcome> outcomes);

inline const std::vector<std::string> kAllPlanners{"rf", "tfp", "on", "alc", "ours"};

bool is_learned_planner(const std::string& name);

// Builds a planner by name; learned variants borrow `dual`, which must outlive it.
std::unique_ptr<Planner> make_planner(const std::string& name, const DualPlanner* dual, const TfpConfig& tfp = {});

struct BenchmarkConfig {
  int episodes = 300;
  std::vector<std::string> planners = kAllPlanners;
  std::vector<double> K_values{2.0, 5.0, 10.0};
  std::uint64_t seed = 1;
  double min_separation_m = 10.0;
  int threads = 1;
  bool write_logs = false;  // keep per-round logs of every episode
  WorldParams world{};
  CueParams cues{};
  SimConfig sim{};
  TfpConfig tfp{};

  void validate() const;
};

// The world, goal and cues of benchmark episode `index`; identical for every planner.
struct BenchmarkEpisode {
  EpisodeSpec spec;
  ScoreMap latent;
};

BenchmarkEpisode make_benchmark_episode(const BenchmarkConfig& cfg, int index);

struct EpisodeRecord {
  int episode = 0;
  std::string planner;
  double K = 0.0;
  std::uint64_t seed = 0;
  EpisodeOutcome outcome;
};

struct PlannerSummary {
  std::string planner;
  double spl = 0.0;
  double success_rate = 0.0;
  double mean_path_m = 0.0;
  int episodes = 0;
};

struct BenchmarkReport {
  std::vector<PlannerSummary> summaries;  // in configured planner order
  std::vector<EpisodeRecord> records;     // episode-major, then planner order

  const PlannerSummary& summary(const std::string& planner) const;
};

// Published SPL values of the full-scale experiment, shown next to local results.
struct ReferenceSpl {
  const char* planner;
  double spl;
};
inline constexpr ReferenceSpl kReferenceSpl[] = {{"ours", 0.413}, {"alc", 0.404}, {"on", 0.383}, {"rf", 0.359}};

BenchmarkReport run_benchmark(const BenchmarkConfig& cfg, const DualPlanner* dual,
                              const std::function<void(int done, int total)>& progress = {});

std::string summary_csv(const BenchmarkReport& report);
std::string episodes_jsonl(const BenchmarkReport& report);
std::string spl_svg(const BenchmarkReport& report);

// summary.csv, episodes.jsonl, spl.svg and, when logs were kept,
// logs/<planner>_NNNN.jsonl.
void export_report(const BenchmarkReport& report, const std::filesystem::path& dir);

}  // namespace alcon
