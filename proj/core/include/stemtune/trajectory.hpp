#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "stemtune/gp.hpp"
#include "stemtune/image.hpp"
#include "stemtune/optics.hpp"
#include "stemtune/pareto.hpp"
#include "stemtune/rewards.hpp"

namespace stemtune {

inline constexpr int kTrajectorySchemaMajor = 1;
inline constexpr const char* kTrajectorySchemaVersion = "1.0";

struct TimingBreakdown {
  double hw_s = 0.0;
  double gp_fit_s = 0.0;
  double acq_opt_s = 0.0;
  double total_s = 0.0;
};

struct GpHyperRecord {
  double signal_var = 0.0;
  double lengthscale = 0.0;
  double noise_var = 0.0;
};

/// One FAIR log row: action, observation reference, rewards, timing split,
/// seeds and the archive state after the update.
struct TrajectoryRecord {
  int step = 0;
  std::string phase;  // "init" | "bo"
  AberrationState action;
  std::string image_ref;  // relative path; empty on failure
  RewardVector rewards;
  TimingBreakdown timing;
  std::uint64_t acquire_seed = 0;
  std::uint64_t ehvi_seed = 0;
  std::uint64_t candidates_seed = 0;
  std::vector<GpHyperRecord> gp_hyper;  // one per objective, empty in init phase
  RewardVector ref_point;
  double hypervolume = 0.0;
  bool exploration_fallback = false;
  std::string error;      // empty on success
  std::string timestamp;  // wall clock, excluded from determinism checks

  std::string to_jsonl() const;
  static TrajectoryRecord from_jsonl(const std::string& line);
};

/// Single-writer run directory: run.jsonl, images/, CSV exports and the
/// config snapshot. The snapshot is written before anything else.
class RunLogger {
 public:
  RunLogger(const std::filesystem::path& dir, const std::string& config_snapshot);

  /// Dumps a 16-bit PGM + sidecar and returns (relative ref, image as it
  /// reads back) so logged rewards stay recomputable from disk.
  std::pair<std::string, Image> dump_image(int step, const Image& image,
                                           const AberrationState& state,
                                           std::uint64_t seed, double dose);

  /// Appends one line; steps must be strictly increasing; flushes before
  /// returning. Throws on write failure.
  void append(const TrajectoryRecord& record);

  void write_pareto_csv(const ParetoArchive& archive);
  void write_hypervolume_csv(const std::vector<std::pair<int, double>>& hv_by_step);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::ofstream log_;
  int last_step_ = -1;
};

std::vector<TrajectoryRecord> read_trajectory(const std::filesystem::path& run_dir);

/// Wall-clock ISO 8601 UTC timestamp.
std::string make_timestamp();

struct ReplayReport {
  bool ok = false;
  int records_checked = 0;
  double max_reward_rel_dev = 0.0;
  int hv_mismatches = 0;
  std::vector<std::string> issues;
};

/// Reloads every dumped image, recomputes both rewards and the archive
/// hypervolume sequence, and reports deviations beyond tolerance.
ReplayReport replay_verify(const std::filesystem::path& run_dir,
                           double tolerance = 1e-9);

struct CostReport {
  struct Row {
    int step = 0;
    double hw_s = 0.0;
    double gp_fit_s = 0.0;
    double acq_opt_s = 0.0;
  };
  std::vector<Row> rows;
  double mean_hw_s = 0.0;
  /// Least-squares slope of (gp_fit_s + acq_opt_s) over BO-phase steps.
  double compute_slope_s_per_step = 0.0;
};

CostReport cost_report(const std::filesystem::path& run_dir);
void write_cost_csv(const std::filesystem::path& run_dir, const CostReport& report);

}  // namespace stemtune
