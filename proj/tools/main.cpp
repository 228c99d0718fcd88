#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pedplan/config.hpp"
#include "pedplan/policy.hpp"
#include "pedplan/render.hpp"
#include "pedplan/risk.hpp"
#include "pedplan/simloop.hpp"

namespace fs = std::filesystem;
using namespace pedplan;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitCollision = 2;

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, path);
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

struct CommonOpts {
  std::string scenario_path;
  std::string config_path;
  std::string profile;
  std::string policy_cache;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool deterministic = false;
  int jobs = 1;
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) cfg = load_run_config_file(opts.config_path);
  if (!opts.profile.empty()) {
    auto p = parse_profile(opts.profile);
    if (!p) throw ConfigError("unknown profile '" + opts.profile + "'");
    cfg.profile = *p;
  }
  if (opts.seed_set) cfg.seed = opts.seed;
  return cfg;
}

std::string run_metrics_csv(const Metrics& m, const RunConfig& cfg,
                            bool deterministic) {
  std::ostringstream out;
  if (!deterministic) {
    auto now = std::chrono::system_clock::now().time_since_epoch();
    out << "# generated_at_unix_ms="
        << std::chrono::duration_cast<std::chrono::milliseconds>(now).count()
        << "\n";
  }
  out << "profile,seed,ticks,distance,velocity_mean,velocity_min,velocity_max,"
         "risk_mean,risk_min,risk_max,collisions,freeze_time,reached_goal\n";
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "%s,%llu,%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d,%.6f,%d\n",
                profile_name(cfg.profile),
                static_cast<unsigned long long>(cfg.seed), m.ticks, m.distance,
                m.v_mean, m.v_min, m.v_max, m.risk_mean, m.risk_min, m.risk_max,
                m.collisions, m.freeze_time, m.reached_goal ? 1 : 0);
  out << buf;
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pedplan: social-force pedestrian simulation with a risk-aware "
               "sampling planner"};
  app.require_subcommand(1);

  CommonOpts opts;

  auto add_common = [&](CLI::App* cmd, bool needs_scenario = true) {
    if (needs_scenario) {
      cmd->add_option("--scenario", opts.scenario_path, "Scenario JSON file")
          ->required();
    }
    cmd->add_option("--config", opts.config_path, "Run configuration JSON file");
    cmd->add_option("--profile", opts.profile,
                    "Planner profile: risk_aware | aggressive | baseline");
    cmd->add_option("--seed", opts.seed, "Master seed")
        ->each([&](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--policy-cache", opts.policy_cache,
                    "Directory for cached policy fields");
    cmd->add_option("--out", opts.out_dir, "Output directory");
    cmd->add_flag("--deterministic", opts.deterministic,
                  "Suppress timestamps in outputs");
    cmd->add_option("--jobs", opts.jobs, "Worker threads for batch runs");
  };

  // policy
  auto* cmd_policy = app.add_subcommand("policy", "Build per-goal policy caches");
  add_common(cmd_policy);
  int policy_n = 0;
  double policy_cell = 0.0;
  cmd_policy->add_option("--n", policy_n, "Number of unique-angle actions");
  cmd_policy->add_option("--cell-size", policy_cell, "Grid cell size in meters");

  // run
  auto* cmd_run = app.add_subcommand("run", "Run one closed-loop simulation");
  add_common(cmd_run);

  // batch
  auto* cmd_batch = app.add_subcommand("batch", "Run seed batches per profile");
  add_common(cmd_batch);
  int batch_seeds = 10;
  std::string batch_profiles = "risk_aware";
  cmd_batch->add_option("--seeds", batch_seeds, "Number of seeds per profile");
  cmd_batch->add_option("--profiles", batch_profiles,
                        "Comma-separated profile list");

  // risk-check
  auto* cmd_risk = app.add_subcommand(
      "risk-check", "Evaluate one (Gaussian, box) pair analytically and by MC");
  std::vector<double> rc_mu{0.0, 0.0};
  std::vector<double> rc_sigma{1.0, 1.0, 0.0};
  std::vector<double> rc_box{0.0, 0.0, 0.0, 2.25, 0.9, 0.0};
  int rc_samples = 100000;
  std::uint64_t rc_seed = 1;
  cmd_risk->add_option("--mu", rc_mu, "Mean: x y")->expected(2);
  cmd_risk->add_option("--sigma", rc_sigma, "Covariance: sxx syy sxy")->expected(3);
  cmd_risk
      ->add_option("--box", rc_box,
                   "Box: cx cy heading half_length half_width inflation")
      ->expected(6);
  cmd_risk->add_option("--mc-samples", rc_samples, "Monte Carlo sample count");
  cmd_risk->add_option("--seed", rc_seed, "Monte Carlo seed");

  // render
  auto* cmd_render = app.add_subcommand("render", "Render trace ticks as SVG");
  std::string render_trace;
  std::string render_out = "out";
  int render_tick = 0;
  int render_last = -1;
  cmd_render->add_option("--trace", render_trace, "Trace file (JSON lines)")
      ->required();
  cmd_render->add_option("--tick", render_tick, "First tick to render");
  cmd_render->add_option("--last-tick", render_last,
                         "Render a range ending at this tick");
  cmd_render->add_option("--out", render_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_policy->parsed()) {
      RunConfig cfg = resolve_config(opts);
      if (policy_n > 0) cfg.policy.n_actions = policy_n;
      if (policy_cell > 0.0) cfg.policy.cell_size = policy_cell;
      Scenario scenario = load_scenario_file(opts.scenario_path);
      std::string cache =
          opts.policy_cache.empty() ? opts.out_dir : opts.policy_cache;
      fs::create_directories(cache);
      CostGrid grid = rasterize(scenario, cfg.policy.cell_size, cfg.policy.costs);
      ActionSet actions = build_action_set(cfg.policy.n_actions);
      std::uint64_t hash = grid_hash(grid);
      double total_s = 0.0;
      for (size_t i = 0; i < scenario.goals.size(); ++i) {
        Vec2 goal = scenario.goals[i];
        std::string path =
            (fs::path(cache) /
             policy_cache_name(hash, goal, cfg.policy.n_actions, cfg.policy.tol))
                .string();
        auto t0 = std::chrono::steady_clock::now();
        PolicyField field;
        bool hit = load_policy(path, field) && field.grid_hash == hash;
        if (!hit) {
          field = value_iteration(grid, goal, actions, cfg.policy.tol);
          save_policy(field, path);
        }
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        total_s += secs;
        std::printf("goal %zu (%.2f, %.2f): %.3f s%s, sweeps=%d\n", i, goal.x,
                    goal.y, secs, hit ? " (cache hit)" : "", field.iterations);
      }
      std::printf("%zu policies ready in %.3f s (cache: %s)\n",
                  scenario.goals.size(), total_s, cache.c_str());
      return kExitOk;
    }

    if (cmd_run->parsed()) {
      RunConfig cfg = resolve_config(opts);
      Scenario scenario = load_scenario_file(opts.scenario_path);
      SimCaches caches = build_caches(scenario, cfg, opts.policy_cache);
      std::ostringstream trace;
      Metrics m = run(scenario, cfg, caches,
                      [&trace](const std::string& line) { trace << line << '\n'; });
      write_atomic(fs::path(opts.out_dir) / "trace.jsonl", trace.str());
      write_atomic(fs::path(opts.out_dir) / "metrics.csv",
                   run_metrics_csv(m, cfg, opts.deterministic));
      std::printf("ticks=%d distance=%.2f v_mean=%.2f risk_max=%.4f %s\n",
                  m.ticks, m.distance, m.v_mean, m.risk_max,
                  m.collisions ? "COLLISION" : (m.reached_goal ? "goal" : "timeout"));
      return m.collisions ? kExitCollision : kExitOk;
    }

    if (cmd_batch->parsed()) {
      RunConfig cfg = resolve_config(opts);
      Scenario scenario = load_scenario_file(opts.scenario_path);
      SimCaches caches = build_caches(scenario, cfg, opts.policy_cache);
      std::vector<PlannerProfile> profiles;
      std::stringstream ss(batch_profiles);
      std::string item;
      while (std::getline(ss, item, ',')) {
        auto p = parse_profile(item);
        if (!p) throw ConfigError("unknown profile '" + item + "'");
        profiles.push_back(*p);
      }
      if (profiles.empty()) throw ConfigError("no profiles given");
      auto rows = batch(scenario, cfg, batch_seeds, profiles, caches, opts.jobs);
      std::string csv = metrics_csv(rows);
      write_atomic(fs::path(opts.out_dir) / "batch.csv", csv);
      std::fputs(csv.c_str(), stdout);
      int collisions = 0;
      for (const auto& r : rows) collisions += r.collisions;
      return collisions ? kExitCollision : kExitOk;
    }

    if (cmd_risk->parsed()) {
      GaussianState g;
      g.mean = {rc_mu[0], rc_mu[1]};
      g.cov = {rc_sigma[0], rc_sigma[1], rc_sigma[2]};
      EgoBox box{{rc_box[0], rc_box[1]}, rc_box[2], rc_box[3], rc_box[4], rc_box[5]};
      double analytic = collision_probability(g, box);
      double mc = mc_collision_probability(g, box, rc_samples, rc_seed);
      double se = std::sqrt(std::max(analytic * (1.0 - analytic), 1e-12) /
                            rc_samples);
      std::printf("analytic=%.8f monte_carlo=%.8f diff=%.2e (3se=%.2e, N=%d)\n",
                  analytic, mc, std::abs(analytic - mc), 3.0 * se, rc_samples);
      return kExitOk;
    }

    if (cmd_render->parsed()) {
      auto lines = read_lines(render_trace);
      int last = render_last < 0 ? render_tick : render_last;
      for (int t = render_tick; t <= last; ++t) {
        std::string svg = render_svg(lines, t);
        char name[64];
        std::snprintf(name, sizeof(name), "tick_%05d.svg", t);
        write_atomic(fs::path(render_out) / name, svg);
      }
      std::printf("rendered ticks %d..%d to %s\n", render_tick, last,
                  render_out.c_str());
      return kExitOk;
    }
  } catch (const ScenarioError& e) {
    std::fprintf(stderr, "scenario error: %s\n", e.what());
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
