#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "alcon/dataset.hpp"
#include "alcon/model_input.hpp"
#include "alcon/neural.hpp"
#include "alcon/planners.hpp"
#include "alcon/sim.hpp"

namespace alcon {

enum class MonitorScope { On, Alc, Both };

std::string_view to_string(MonitorScope s);
MonitorScope parse_monitor_scope(std::string_view text);

struct RlpConfig {
  double w_M = 0.7;
  double G_m = 5.0;
  double K_max_m = 10.0;
  double w_alc_min = 0.1;
  double w_alc_max = 0.9;
  double expand_margin_m = 3.0;  // ALC maps are padded so the prediction may leave the known map
  MonitorScope monitor = MonitorScope::On;
  TfpConfig tfp{};

  void validate() const;
};

struct TrainConfig {
  double learning_rate = 0.001;
  double gamma = 0.9;
  double k = 0.1;
  int batch_size = 8;
  int epochs = 30;
  std::uint64_t seed = 1;
  int downsample = 1;
  double holdout_fraction = 0.1;
  bool advantage_weighting = false;
  double oracle_step_m = 1.0;  // spacing of reward samples along the oracle path

  void validate() const;
};

double loss_euclid(Point predicted, Point gt);

// Regularized inverse 1 / (1 + E).
double reward_from_loss(double E);

// A = R + gamma * V_next - V_s.
double advantage(double R, double V_s, double V_next, double gamma);

// A^2 + k |V_pred - V_oracle|.
double critic_loss(double A, double V_pred, double V_oracle, double k);

// clamp(1 - K / K_max, w_min, w_max).
double w_alc(double K, const RlpConfig& cfg);

// Pulls p_M towards p_I when they disagree by more than G.
Point monitor_fuse(Point p_M, Point p_I, double G_m = 5.0, double w_M = 0.7);

struct FusionTrace {
  bool alc_valid = false;
  bool on_valid = false;
  double weight = 0.0;     // w_ALC used for the blend
  Point blended{};         // p before frontier projection
  bool rf_fallback = false;
};

// Blends the two branch predictions with w_ALC(K) and projects onto the
// nearest frontier. A missing or out-of-bounds prediction is replaced by the
// other one; with neither, a random frontier is drawn.
SubgoalProposal alc_on_fuse(std::optional<Point> p_alc, std::optional<Point> p_on, double K,
                            const FrontierSet& frontiers, const GridGeometry& bounds, const RlpConfig& cfg, Rng& rng,
                            FusionTrace* trace = nullptr);

// Model-input builders shared by training and inference.
ModelInput on_model_input(const ScoreMap& clean, const BoundingBox& mapped_box, int size = kModelInputSize);

struct AlcCrop {
  ScoreMap map;     // single disk at the predicted goal, padded by the margin
  BoundingBox box;  // indexes `map`
};
AlcCrop alc_crop(const GridGeometry& geometry, Point predicted_goal, const BoundingBox& mapped_box,
                 double margin_m);

struct ActorCritic {
  nn::RegressionModel actor;
  nn::RegressionModel critic;
};

struct DualPlanner {
  ActorCritic on;
  ActorCritic alc;
  RlpConfig cfg;
};

// on_actor.bin, on_critic.bin, alc_actor.bin, alc_critic.bin
void save_dual(const DualPlanner& dual, const std::filesystem::path& dir);
DualPlanner load_dual(const std::filesystem::path& dir, const RlpConfig& cfg);
bool dual_files_present(const std::filesystem::path& dir);

struct EpochStats {
  int epoch = 0;
  double E_on = 0.0;
  double E_alc = 0.0;
  double advantage_on = 0.0;
  double advantage_alc = 0.0;
  double critic_loss_on = 0.0;
  double critic_loss_alc = 0.0;
  double holdout_E_on = 0.0;
  double holdout_E_alc = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  double random_E_on = 0.0;  // uniform-random subgoal baseline on the held-out set
  double random_E_alc = 0.0;
  int train_samples = 0;
  int holdout_samples = 0;
};

std::string train_log_csv(const TrainReport& report);

struct TrainResult {
  DualPlanner dual;
  TrainReport report;
};

TrainResult train_dual(const DatasetSource& data, const TrainConfig& cfg, const RlpConfig& rlp = {},
                       const std::function<void(const EpochStats&)>& on_epoch = {});

// Discounted sum of reward_at sampled every `step_m` along the shortest path
// from `start` to `goal` on `grid`.
double oracle_value(const OccupancyGrid& grid, const ScoreMap& score, Point start, Point goal, double gamma,
                    double step_m = 1.0);

enum class Variant { On, Alc, Ours };

std::string_view to_string(Variant v);

struct PlanTrace {
  std::optional<Point> p_M;
  std::optional<Point> p_I;    // f_ON prediction
  std::optional<Point> p_on;   // ON branch after the monitor
  std::optional<Point> p_alc;  // ALC branch (after the monitor when it applies there)
  FusionTrace fusion;
};

SubgoalProposal plan_dual(Variant variant, const ScoreMap& observed_score, const OccupancyGrid& observed,
                          Point predicted_goal, double K, const DualPlanner& dual, const FrontierSet& frontiers,
                          Rng& rng, PlanTrace* trace = nullptr);

inline SubgoalProposal plan_ours(const ScoreMap& observed_score, const OccupancyGrid& observed, Point predicted_goal,
                                 double K, const DualPlanner& dual, const FrontierSet& frontiers, Rng& rng,
                                 PlanTrace* trace = nullptr) {
  return plan_dual(Variant::Ours, observed_score, observed, predicted_goal, K, dual, frontiers, rng, trace);
}

class LearnedPlanner final : public Planner {
 public:
  LearnedPlanner(Variant variant, const DualPlanner& dual) : variant_(variant), dual_(dual) {}
  std::string name() const override { return std::string(to_string(variant_)); }
  SubgoalProposal plan(const PlanContext& ctx, Rng& rng) const override;

 private:
  Variant variant_;
  const DualPlanner& dual_;
};

}  // namespace alcon
