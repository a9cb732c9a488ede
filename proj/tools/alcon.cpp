// alcon: generate -> train -> run -> bench -> replay.
//
// Exit codes: 0 success, 1 invalid configuration (the offending key is
// printed), 2 command-line usage error, 3 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "alcon/config.hpp"
#include "alcon/dataset.hpp"
#include "alcon/error.hpp"
#include "alcon/eval.hpp"
#include "alcon/rlp.hpp"
#include "alcon/sim.hpp"
#include "alcon/text.hpp"

namespace fs = std::filesystem;
using namespace alcon;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "key=value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", c.sets, "override a configuration key (key=value), repeatable");
  cmd->add_option("--seed", c.seed, "master seed (falls back to ALCON_SEED, then the config)");
}

// Defaults, then ALCON_SEED, then the config file, then --set, then --seed.
RunConfig build_config(const Common& c) {
  RunConfig cfg;
  if (const char* env = std::getenv("ALCON_SEED"); env && *env) cfg.seed = parse_u64(env, "seed");
  if (!c.config_file.empty())
    for (const auto& [k, v] : read_key_values(c.config_file)) cfg.set(k, v);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(s, "--set expects key=value");
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
  if (c.seed) cfg.seed = *c.seed;
  cfg.validate();
  return cfg;
}

void prepare_out(const fs::path& out, const RunConfig& cfg) {
  fs::create_directories(out);
  write_text_file(out / "config.txt", cfg.dump());
}

void emit(const json& j) { std::cout << j.dump() << std::endl; }

std::optional<DualPlanner> maybe_load_models(const std::vector<std::string>& planners, const RunConfig& cfg) {
  bool needed = false;
  for (const auto& p : planners) needed = needed || is_learned_planner(p);
  if (!needed) return std::nullopt;
  if (cfg.models_dir.empty()) throw ConfigError("paths.models", "learned planners need --models DIR");
  return load_dual(cfg.models_dir, cfg.rlp);
}

// ---- gen ----

struct GenArgs {
  Common common;
  std::optional<int> count;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  RunConfig cfg = build_config(a.common);
  if (a.count) {
    cfg.set("dataset.count", std::to_string(*a.count));
    cfg.validate();
  }
  prepare_out(a.out, cfg);
  const int n = write_dataset(a.out, cfg.seed, cfg.dataset, [&](int i) {
    if (i % 100 == 0 || i == cfg.dataset.count) std::fprintf(stderr, "gen %d/%d\r", i, cfg.dataset.count);
  });
  std::fprintf(stderr, "\n");
  emit({{"command", "gen"}, {"count", n}, {"seed", cfg.seed}, {"out", a.out}});
  return 0;
}

// ---- train ----

struct TrainArgs {
  Common common;
  std::string dataset;
  std::string out;
};

int cmd_train(const TrainArgs& a) {
  RunConfig cfg = build_config(a.common);
  if (!a.dataset.empty()) cfg.dataset_dir = a.dataset;
  if (cfg.dataset_dir.empty()) throw ConfigError("paths.dataset", "need --dataset DIR");
  cfg.models_dir = a.out;
  const DatasetSource data = DatasetSource::from_directory(cfg.dataset_dir);
  prepare_out(a.out, cfg);
  const TrainResult res = train_dual(data, cfg.train, cfg.rlp, [](const EpochStats& e) {
    std::fprintf(stderr, "epoch %d  E_on %.3f  E_alc %.3f  holdout E_on %.3f  E_alc %.3f\n", e.epoch, e.E_on,
                 e.E_alc, e.holdout_E_on, e.holdout_E_alc);
  });
  save_dual(res.dual, a.out);
  write_text_file(fs::path(a.out) / "train_log.csv", train_log_csv(res.report));
  const EpochStats& last = res.report.epochs.back();
  emit({{"command", "train"},
        {"samples", res.report.train_samples},
        {"holdout", res.report.holdout_samples},
        {"holdout_E_on", last.holdout_E_on},
        {"holdout_E_alc", last.holdout_E_alc},
        {"random_E_on", res.report.random_E_on},
        {"random_E_alc", res.report.random_E_alc},
        {"out", a.out}});
  return 0;
}

// ---- run ----

struct RunArgs {
  Common common;
  std::string spec;
  std::optional<int> episode;
  std::string planner;
  std::string models;
  std::string out;
};

// An episode written out in explicit form; re-running it reproduces the episode.
struct SpecFile {
  std::uint64_t world_seed = 0;
  std::uint64_t cue_seed = 0;
  Pose start;
  Point goal;
  Point predicted;
  double K = 0.0;
  std::uint64_t seed = 0;
};

std::string spec_text(const SpecFile& s) {
  std::string out;
  const auto put = [&](const char* k, const std::string& v) { out += std::string(k) + "=" + v + "\n"; };
  put("world_seed", std::to_string(s.world_seed));
  put("cue_seed", std::to_string(s.cue_seed));
  put("start_x", format_double(s.start.x));
  put("start_y", format_double(s.start.y));
  put("start_heading", format_double(s.start.heading));
  put("goal_x", format_double(s.goal.x));
  put("goal_y", format_double(s.goal.y));
  put("predicted_x", format_double(s.predicted.x));
  put("predicted_y", format_double(s.predicted.y));
  put("K", format_double(s.K));
  put("seed", std::to_string(s.seed));
  return out;
}

SpecFile benchmark_spec(const RunConfig& cfg, int index) {
  if (index < 0) throw ConfigError("episode", "must be non-negative");
  const auto i = static_cast<std::uint64_t>(index);
  const BenchmarkEpisode ep = make_benchmark_episode(cfg.bench, index);
  return {derive_seed(cfg.bench.seed, Stream::kWorld, i), derive_seed(cfg.bench.seed, Stream::kCues, i), ep.spec.start,
          ep.spec.goal, ep.spec.predicted_goal, ep.spec.K, ep.spec.seed};
}

SpecFile read_spec(const fs::path& path, const RunConfig& cfg) {
  const KeyValues kv = read_key_values(path);
  if (const auto it = kv.find("episode"); it != kv.end()) {
    if (kv.size() != 1) throw ConfigError("episode", "an episode index cannot be combined with explicit fields");
    return benchmark_spec(cfg, static_cast<int>(parse_int(it->second, "episode")));
  }
  static const char* const kKeys[] = {"world_seed", "cue_seed", "start_x", "start_y", "start_heading", "goal_x",
                                      "goal_y", "predicted_x", "predicted_y", "K", "seed"};
  for (const auto& [k, v] : kv) {
    bool known = false;
    for (const char* key : kKeys) known = known || k == key;
    if (!known) throw ConfigError(k, "unknown episode spec key");
  }
  const auto get = [&](const char* k) -> const std::string& {
    const auto it = kv.find(k);
    if (it == kv.end()) throw ConfigError(k, "missing from " + path.string());
    return it->second;
  };
  const auto num = [&](const char* k) { return parse_double(get(k), k); };
  SpecFile s;
  s.world_seed = parse_u64(get("world_seed"), "world_seed");
  s.cue_seed = parse_u64(get("cue_seed"), "cue_seed");
  s.start = {num("start_x"), num("start_y"), normalize_angle(num("start_heading"))};
  s.goal = {num("goal_x"), num("goal_y")};
  s.predicted = kv.count("predicted_x") ? Point{num("predicted_x"), num("predicted_y")} : s.goal;
  s.K = num("K");
  if (!(s.K >= 0.0)) throw ConfigError("K", "must be non-negative");
  s.seed = parse_u64(get("seed"), "seed");
  return s;
}

int cmd_run(const RunArgs& a) {
  RunConfig cfg = build_config(a.common);
  if (!a.models.empty()) cfg.models_dir = a.models;
  if (std::find(kAllPlanners.begin(), kAllPlanners.end(), a.planner) == kAllPlanners.end())
    throw ConfigError("planner", "unknown planner '" + a.planner + "'");
  const SpecFile s = a.episode ? benchmark_spec(cfg, *a.episode) : read_spec(a.spec, cfg);

  EpisodeSpec spec;
  spec.workspace = gen_workspace(s.world_seed, cfg.world);
  const GridGeometry& g = spec.workspace.geometry();
  for (const auto& [name, p] : {std::pair{"start", s.start.position()}, std::pair{"goal", s.goal}}) {
    const Cell c = g.world_to_cell(p);
    if (!g.contains(c) || spec.workspace.at(c) != CellState::Free)
      throw ConfigError(std::string(name) + "_x", "not on a Free cell of the generated world");
  }
  spec.start = s.start;
  spec.goal = s.goal;
  spec.predicted_goal = s.predicted;
  spec.K = s.K;
  spec.seed = s.seed;
  const ScoreMap latent = gen_latent_scores(spec.workspace, spec.goal, cfg.cues, s.cue_seed);

  const std::optional<DualPlanner> dual = maybe_load_models({a.planner}, cfg);
  const auto planner = make_planner(a.planner, dual ? &*dual : nullptr, cfg.rlp.tfp);
  prepare_out(a.out, cfg);
  write_text_file(fs::path(a.out) / "spec.txt", spec_text(s));
  const EpisodeOutcome o = run_episode(spec, latent, *planner, cfg.sim);
  write_text_file(fs::path(a.out) / "episode.jsonl", episode_log_jsonl(o.log));
  const double spl_value = spl(std::span(&o, 1));
  emit({{"command", "run"},
        {"planner", a.planner},
        {"success", o.success},
        {"path_length", o.path_length},
        {"shortest_length", o.shortest_length},
        {"spl", spl_value},
        {"rounds", o.steps},
        {"moves", o.moves},
        {"out", a.out}});
  return 0;
}

// ---- bench ----

struct BenchArgs {
  Common common;
  std::string models;
  std::optional<int> episodes;
  std::optional<int> threads;
  std::string out;
};

int cmd_bench(const BenchArgs& a) {
  Common c = a.common;
  if (a.episodes) c.sets.push_back("bench.episodes=" + std::to_string(*a.episodes));
  if (a.threads) c.sets.push_back("bench.threads=" + std::to_string(*a.threads));
  if (!a.models.empty()) c.sets.push_back("paths.models=" + a.models);
  const RunConfig cfg = build_config(c);
  // Missing models fail here, before any episode runs.
  const std::optional<DualPlanner> dual = maybe_load_models(cfg.bench.planners, cfg);
  prepare_out(a.out, cfg);
  const BenchmarkReport report = run_benchmark(cfg.bench, dual ? &*dual : nullptr, [](int done, int total) {
    std::fprintf(stderr, "bench %d/%d\r", done, total);
  });
  std::fprintf(stderr, "\n");
  export_report(report, a.out);
  json spls = json::object();
  for (const auto& s : report.summaries) spls[s.planner] = s.spl;
  emit({{"command", "bench"}, {"episodes", cfg.bench.episodes}, {"spl", spls}, {"out", a.out}});
  return 0;
}

// ---- replay ----

struct ReplayArgs {
  std::string log;
  double tolerance = 1e-9;
};

int cmd_replay(const ReplayArgs& a) {
  const EpisodeLog log = parse_episode_log(read_text_file(a.log));
  const double err = replay_path_length_error(log);
  const double logged = log.rounds.empty() ? 0.0 : log.rounds.back().path_length;
  const double rel = err / std::max(1.0, logged);
  const bool ok = rel <= a.tolerance;
  emit({{"command", "replay"},
        {"rounds", log.rounds.size()},
        {"path_length", logged},
        {"max_abs_error", err},
        {"relative_error", rel},
        {"ok", ok}});
  return ok ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"alcon: grid-world ALC/ON subgoal planning laboratory"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a training dataset");
  add_common(g, gen.common);
  g->add_option("--count", gen.count, "number of samples")->check(CLI::PositiveNumber);
  g->add_option("--out", gen.out, "output directory")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train the ON and ALC actor-critic pairs");
  add_common(t, train.common);
  t->add_option("--dataset", train.dataset, "dataset directory");
  t->add_option("--out", train.out, "model directory")->required();

  RunArgs run;
  auto* r = app.add_subcommand("run", "run one episode with one planner");
  add_common(r, run.common);
  auto* spec_opt = r->add_option("--spec", run.spec, "episode spec file")->check(CLI::ExistingFile);
  auto* ep_opt = r->add_option("--episode", run.episode, "benchmark episode index");
  spec_opt->excludes(ep_opt);
  r->add_option("--planner", run.planner, "rf, tfp, on, alc or ours")->required();
  r->add_option("--models", run.models, "model directory for learned planners");
  r->add_option("--out", run.out, "output directory")->required();

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "benchmark planners on paired episodes");
  add_common(b, bench.common);
  b->add_option("--models", bench.models, "model directory for learned planners");
  b->add_option("--episodes", bench.episodes, "episode count")->check(CLI::PositiveNumber);
  b->add_option("--threads", bench.threads, "worker threads")->check(CLI::PositiveNumber);
  b->add_option("--out", bench.out, "output directory")->required();

  ReplayArgs replay;
  auto* p = app.add_subcommand("replay", "recompute path lengths of an episode log");
  p->add_option("--log", replay.log, "episode JSON-lines log")->required()->check(CLI::ExistingFile);
  p->add_option("--tolerance", replay.tolerance, "relative tolerance");

  try {
    app.parse(argc, argv);
    if (r->parsed() && run.spec.empty() && !run.episode) throw CLI::RequiredError("--spec or --episode");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen);
    if (t->parsed()) return cmd_train(train);
    if (r->parsed()) return cmd_run(run);
    if (b->parsed()) return cmd_bench(bench);
    if (p->parsed()) return cmd_replay(replay);
  } catch (const ConfigError& e) {
    std::cerr << "alcon: invalid configuration: " << e.what() << "\n";
    emit({{"error", "config"}, {"key", e.key()}, {"message", e.what()}});
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "alcon: " << e.what() << "\n";
    emit({{"error", "runtime"}, {"message", e.what()}});
    return kExitRuntime;
  }
  return kExitUsage;
}
