#include "alcon/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "alcon/error.hpp"
#include "alcon/text.hpp"

namespace alcon {

namespace fs = std::filesystem;

double spl(std::span<const EpisodeOutcome> outcomes) {
  if (outcomes.empty()) throw Error("spl of an empty outcome list");
  double sum = 0.0;
  for (const EpisodeOutcome& o : outcomes) {
    if (!(o.shortest_length > 0.0)) throw Error("spl: shortest path length must be positive");
    if (o.success) sum += o.shortest_length / std::max(o.path_length, o.shortest_length);
  }
  return sum / static_cast<double>(outcomes.size());
}

bool is_learned_planner(const std::string& name) { return name == "on" || name == "alc" || name == "ours"; }

std::unique_ptr<Planner> make_planner(const std::string& name, const DualPlanner* dual, const TfpConfig& tfp) {
  if (name == "rf") return std::make_unique<RandomFrontierPlanner>();
  if (name == "tfp") return std::make_unique<TfpPlanner>(tfp);
  if (is_learned_planner(name)) {
    if (!dual) throw Error("planner '" + name + "' needs trained models");
    const Variant v = name == "on" ? Variant::On : name == "alc" ? Variant::Alc : Variant::Ours;
    return std::make_unique<LearnedPlanner>(v, *dual);
  }
  throw ConfigError("bench.planners", "unknown planner '" + name + "'");
}

void BenchmarkConfig::validate() const {
  if (episodes <= 0) throw ConfigError("bench.episodes", "must be positive");
  if (planners.empty()) throw ConfigError("bench.planners", "need at least one planner");
  for (const auto& p : planners)
    if (std::find(kAllPlanners.begin(), kAllPlanners.end(), p) == kAllPlanners.end())
      throw ConfigError("bench.planners", "unknown planner '" + p + "'");
  if (K_values.empty()) throw ConfigError("bench.K_values", "need at least one value");
  for (double K : K_values)
    if (!(K >= 0.0)) throw ConfigError("bench.K_values", "K must be non-negative");
  if (!(min_separation_m >= 0.0)) throw ConfigError("bench.min_separation_m", "must be non-negative");
  if (threads < 1) throw ConfigError("bench.threads", "must be at least 1");
  world.validate();
  sim.validate();
}

BenchmarkEpisode make_benchmark_episode(const BenchmarkConfig& cfg, int index) {
  const auto i = static_cast<std::uint64_t>(index);
  const OccupancyGrid world = gen_workspace(derive_seed(cfg.seed, Stream::kWorld, i), cfg.world);
  const std::uint64_t ep_seed = derive_seed(cfg.seed, Stream::kEpisode, i);
  Rng rng(derive_seed(ep_seed, Stream::kEpisode));
  const double K = cfg.K_values[uniform_index(rng, cfg.K_values.size())];
  EpisodeSpec spec = sample_episode(world, K, ep_seed, {cfg.min_separation_m, 100});
  ScoreMap latent = gen_latent_scores(spec.workspace, spec.goal, cfg.cues, derive_seed(cfg.seed, Stream::kCues, i));
  return {std::move(spec), std::move(latent)};
}

const PlannerSummary& BenchmarkReport::summary(const std::string& planner) const {
  for (const auto& s : summaries)
    if (s.planner == planner) return s;
  throw Error("no results for planner '" + planner + "'");
}

BenchmarkReport run_benchmark(const BenchmarkConfig& cfg, const DualPlanner* dual,
                              const std::function<void(int, int)>& progress) {
  cfg.validate();
  std::vector<std::unique_ptr<Planner>> planners;
  for (const auto& name : cfg.planners) planners.push_back(make_planner(name, dual, cfg.tfp));

  const std::size_t np = planners.size();
  std::vector<EpisodeRecord> records(static_cast<std::size_t>(cfg.episodes) * np);
  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::mutex mu;
  std::exception_ptr failure;

  const auto worker = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= cfg.episodes) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        const BenchmarkEpisode ep = make_benchmark_episode(cfg, i);
        // Planners share one world, so they share its visibility memo.
        VisibilityCache visibility(ep.spec.workspace, cfg.sim.fov);
        EpisodeHooks hooks;
        hooks.go.visibility = &visibility;
        for (std::size_t p = 0; p < np; ++p) {
          EpisodeRecord& r = records[static_cast<std::size_t>(i) * np + p];
          r.episode = i;
          r.planner = cfg.planners[p];
          r.K = ep.spec.K;
          r.seed = ep.spec.seed;
          r.outcome = run_episode(ep.spec, ep.latent, *planners[p], cfg.sim, hooks);
          if (!cfg.write_logs) r.outcome.log = {};
        }
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
      const int d = ++done;
      if (progress) {
        std::lock_guard lock(mu);
        progress(d, cfg.episodes);
      }
    }
  };

  if (cfg.threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < cfg.threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  BenchmarkReport report;
  report.records = std::move(records);
  for (std::size_t p = 0; p < np; ++p) {
    std::vector<EpisodeOutcome> outcomes;
    PlannerSummary s;
    s.planner = cfg.planners[p];
    double successes = 0.0, path = 0.0;
    for (int i = 0; i < cfg.episodes; ++i) {
      const EpisodeOutcome& o = report.records[static_cast<std::size_t>(i) * np + p].outcome;
      outcomes.push_back({o.success, o.path_length, o.shortest_length, o.steps, o.moves, {}});
      successes += o.success ? 1.0 : 0.0;
      path += o.path_length;
    }
    s.spl = spl(outcomes);
    s.episodes = cfg.episodes;
    s.success_rate = successes / cfg.episodes;
    s.mean_path_m = path / cfg.episodes;
    report.summaries.push_back(s);
  }
  return report;
}

std::string summary_csv(const BenchmarkReport& report) {
  std::string out = "planner,spl,success_rate,mean_path_m,episodes\n";
  for (const auto& s : report.summaries)
    out += s.planner + "," + format_double(s.spl) + "," + format_double(s.success_rate) + "," +
           format_double(s.mean_path_m) + "," + std::to_string(s.episodes) + "\n";
  return out;
}

std::string episodes_jsonl(const BenchmarkReport& report) {
  std::string out;
  for (const auto& r : report.records) {
    const EpisodeOutcome& o = r.outcome;
    nlohmann::ordered_json j;
    j["episode"] = r.episode;
    j["planner"] = r.planner;
    j["K"] = r.K;
    j["seed"] = r.seed;
    j["success"] = o.success;
    j["path_length"] = o.path_length;
    j["shortest_length"] = o.shortest_length;
    j["spl"] = o.success ? o.shortest_length / std::max(o.path_length, o.shortest_length) : 0.0;
    j["steps"] = o.steps;
    j["moves"] = o.moves;
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string spl_svg(const BenchmarkReport& report) {
  const int bar_w = 60, gap = 30, left = 60, top = 40, plot_h = 240;
  const int n = static_cast<int>(report.summaries.size());
  const int width = left + n * (bar_w + gap) + gap;
  const int height = top + plot_h + 60;
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">SPL per planner</text>\n";
  const int base = top + plot_h;
  s << "<line x1=\"" << left << "\" y1=\"" << base << "\" x2=\"" << width - 10 << "\" y2=\"" << base
    << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = t * 0.25;
    const int y = base - static_cast<int>(v * plot_h);
    s << "<text x=\"" << left - 8 << "\" y=\"" << y + 4
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << fixed(v, 2) << "</text>\n";
  }
  for (int i = 0; i < n; ++i) {
    const auto& sum = report.summaries[static_cast<std::size_t>(i)];
    const int x = left + gap + i * (bar_w + gap);
    const int h = static_cast<int>(std::clamp(sum.spl, 0.0, 1.0) * plot_h);
    s << "<rect x=\"" << x << "\" y=\"" << base - h << "\" width=\"" << bar_w << "\" height=\"" << h
      << "\" fill=\"#4878a8\"/>\n";
    s << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << base - h - 6
      << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << fixed(sum.spl, 3) << "</text>\n";
    s << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << base + 18
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << sum.planner << "</text>\n";
    for (const auto& ref : kReferenceSpl) {
      if (sum.planner != ref.planner) continue;
      const int y = base - static_cast<int>(ref.spl * plot_h);
      s << "<line x1=\"" << x - 4 << "\" y1=\"" << y << "\" x2=\"" << x + bar_w + 4 << "\" y2=\"" << y
        << "\" stroke=\"#c04040\" stroke-dasharray=\"4 2\"/>\n";
    }
  }
  s << "<text x=\"" << left << "\" y=\"" << height - 12
    << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#c04040\">dashed: published reference SPL</text>\n"
    << "</svg>\n";
  return s.str();
}

void export_report(const BenchmarkReport& report, const fs::path& dir) {
  try {
    fs::create_directories(dir);
  } catch (const fs::filesystem_error& e) {
    throw Error("cannot create " + dir.string() + ": " + e.what());
  }
  write_text_file(dir / "summary.csv", summary_csv(report));
  write_text_file(dir / "episodes.jsonl", episodes_jsonl(report));
  write_text_file(dir / "spl.svg", spl_svg(report));
  bool any_logs = false;
  for (const auto& r : report.records) any_logs = any_logs || !r.outcome.log.rounds.empty();
  if (!any_logs) return;
  fs::create_directories(dir / "logs");
  for (const auto& r : report.records) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%04d.jsonl", r.planner.c_str(), r.episode);
    write_text_file(dir / "logs" / name, episode_log_jsonl(r.outcome.log));
  }
}

}  // namespace alcon
