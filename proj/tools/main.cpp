// stemtune: virtual aberration-corrected STEM tuning workbench.
//
// Subcommands:
//   grid      exhaustive reward landscape over the active coefficients
//   optimize  multi-objective Bayesian optimization run
//   replay    re-verify a finished run from its artifacts
//   cost      timing breakdown of a finished run
//   select    pick an operating point off a run's Pareto front
//
// Exit codes: 0 success, 1 verification mismatch, 2 invalid configuration,
// 3 numerical failure.

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "stemtune/errors.hpp"
#include "stemtune/grid_search.hpp"
#include "stemtune/mobo.hpp"
#include "stemtune/run_config.hpp"
#include "stemtune/trajectory.hpp"
#include "stemtune/virtual_scope.hpp"

namespace {

using namespace stemtune;

constexpr int kExitOk = 0;
constexpr int kExitMismatch = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string profile;
  bool no_noise = false;
};

RunConfig load_config(const GlobalOptions& opt) {
  RunConfig cfg;
  if (!opt.config_path.empty()) cfg = RunConfig::from_file(opt.config_path);
  if (!opt.profile.empty()) cfg.apply_profile(opt.profile);
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.no_noise) cfg.noise.enabled = false;
  cfg.validate();
  return cfg;
}

std::filesystem::path require_out(const GlobalOptions& opt, const char* verb) {
  if (opt.out_dir.empty()) {
    throw ConfigError(std::string(verb) + " needs --out <run directory>");
  }
  return opt.out_dir;
}

void write_snapshot(const std::filesystem::path& dir, const RunConfig& cfg) {
  std::filesystem::create_directories(dir);
  std::ofstream snap(dir / "config.snapshot");
  if (!snap) throw std::runtime_error("cannot write " + (dir / "config.snapshot").string());
  snap << cfg.to_snapshot();
}

int cmd_grid(const GlobalOptions& opt, int levels) {
  const RunConfig cfg = load_config(opt);
  const auto dir = require_out(opt, "grid");
  write_snapshot(dir, cfg);  // snapshot first, outputs after

  const GridResult result = grid_evaluate(cfg, levels);
  write_landscape_csv(dir / "landscape.csv", cfg.space, result);
  write_grid_pareto_csv(dir / "pareto.csv", cfg.space, result);

  std::printf("grid: %zu evaluations over %d axes, %zu on the Pareto front\n",
              result.points.size(), cfg.space.dim(), result.front.size());
  std::printf("wrote %s and %s\n", (dir / "landscape.csv").c_str(),
              (dir / "pareto.csv").c_str());
  return kExitOk;
}

int cmd_optimize(const GlobalOptions& opt) {
  const RunConfig cfg = load_config(opt);
  const auto dir = require_out(opt, "optimize");

  VirtualScope scope(cfg.optics, cfg.specimen, cfg.noise, cfg.latency, cfg.seed);
  scope.set_bounds(cfg.space.coeff_bounds());
  RunLogger logger(dir, cfg.to_snapshot());
  const MoboResult result =
      run_mobo(scope, cfg.space, cfg.mobo, cfg.rewards, cfg.seed, &logger);

  std::printf("optimize: %zu observations, %zu on the Pareto front, hv = %.6g\n",
              result.archive.size(), result.archive.front().size(),
              result.archive.hv());
  if (!result.completed) {
    std::fprintf(stderr, "optimize: stopped early: %s\n", result.error.c_str());
    return kExitNumerical;
  }
  std::printf("run directory: %s\n", dir.c_str());
  return kExitOk;
}

int cmd_replay(const GlobalOptions& opt, double tolerance) {
  const auto dir = require_out(opt, "replay");
  const ReplayReport report = replay_verify(dir, tolerance);
  std::printf("replay: %d records, max reward deviation %.3g, %d hv mismatches\n",
              report.records_checked, report.max_reward_rel_dev, report.hv_mismatches);
  for (const auto& issue : report.issues) {
    std::fprintf(stderr, "replay: %s\n", issue.c_str());
  }
  if (!report.ok) {
    std::fprintf(stderr, "replay: FAILED\n");
    return kExitMismatch;
  }
  std::printf("replay: OK\n");
  return kExitOk;
}

int cmd_cost(const GlobalOptions& opt) {
  const auto dir = require_out(opt, "cost");
  const CostReport report = cost_report(dir);
  write_cost_csv(dir, report);
  std::printf("cost: %zu steps, mean hardware time %.6g s/step, "
              "compute slope %.6g s/step\n",
              report.rows.size(), report.mean_hw_s, report.compute_slope_s_per_step);
  std::printf("wrote %s\n", (dir / "cost.csv").c_str());
  return kExitOk;
}

int cmd_select(const GlobalOptions& opt, const std::vector<double>& weights,
               std::optional<int> index) {
  const auto dir = require_out(opt, "select");
  const RunConfig cfg = RunConfig::from_file(dir / "config.snapshot");
  const auto records = read_trajectory(dir);

  ParetoArchive archive;
  for (const auto& rec : records) {
    if (!rec.error.empty()) continue;
    archive.add(cfg.space.from_state(rec.action), rec.rewards);
  }
  if (archive.empty()) throw ConfigError("select: run has no successful observations");
  const auto& front = archive.front();

  int pick;
  if (index) {
    if (*index < 0 || *index >= static_cast<int>(front.size())) {
      throw ConfigError("select: --index out of range; front has " +
                        std::to_string(front.size()) + " points");
    }
    pick = front[*index];
  } else {
    std::vector<double> w = weights;
    if (w.empty()) w = {0.5, 0.5};
    if (w.size() != 2 || w[0] < 0 || w[1] < 0 || w[0] + w[1] <= 0) {
      throw ConfigError("select: --weights needs two nonnegative values");
    }
    pick = front[0];
    double best = -1e300;
    for (int i : front) {
      const auto& f = archive.entries()[i].f;
      const double score = w[0] * f.contrast + w[1] * f.fft;
      if (score > best) {
        best = score;
        pick = i;
      }
    }
  }

  const auto& entry = archive.entries()[pick];
  std::printf("selected observation %d of %zu (front size %zu)\n", pick,
              archive.size(), front.size());
  for (size_t a = 0; a < entry.x.size(); ++a) {
    std::printf("  %s = %.17g nm\n",
                kCoeffNames[static_cast<int>(cfg.space.axes[a].coeff)], entry.x[a]);
  }
  std::printf("  contrast = %.17g\n  fft = %.17g\n", entry.f.contrast, entry.f.fft);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Virtual STEM aberration tuning and multi-objective optimization"};
  app.require_subcommand(1);

  GlobalOptions opt;
  app.add_option("--config", opt.config_path, "Run configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", opt.seed, "Master seed override");
  app.add_option("--out", opt.out_dir, "Run directory for outputs");
  app.add_option("--profile", opt.profile, "Latency profile")
      ->check(CLI::IsMember({"desk", "bench"}));
  app.add_flag("--no-noise", opt.no_noise, "Disable the detector noise model");

  int levels = 5;
  auto* grid = app.add_subcommand("grid", "Exhaustive reward landscape");
  grid->fallthrough();  // shared flags may follow the subcommand
  grid->add_option("--levels", levels, "Grid levels per axis")->check(CLI::Range(2, 9));

  auto* optimize = app.add_subcommand("optimize", "Run the optimization loop");
  optimize->fallthrough();

  double tolerance = 1e-9;
  auto* replay = app.add_subcommand("replay", "Verify a run from its artifacts");
  replay->fallthrough();
  replay->add_option("--tolerance", tolerance, "Relative reward tolerance");

  auto* cost = app.add_subcommand("cost", "Timing breakdown of a run");
  cost->fallthrough();

  std::vector<double> weights;
  std::optional<int> index;
  auto* select = app.add_subcommand("select", "Pick a point off the Pareto front");
  select->fallthrough();
  select->add_option("--weights", weights, "Scalarization weights: contrast, fft")
      ->expected(2);
  select->add_option("--index", index, "Front index instead of weights");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (grid->parsed()) return cmd_grid(opt, levels);
    if (optimize->parsed()) return cmd_optimize(opt);
    if (replay->parsed()) return cmd_replay(opt, tolerance);
    if (cost->parsed()) return cmd_cost(opt);
    if (select->parsed()) return cmd_select(opt, weights, index);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitConfig;
}
