#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stemtune/gp.hpp"
#include "stemtune/pareto.hpp"
#include "stemtune/run_config.hpp"
#include "stemtune/search_space.hpp"
#include "stemtune/trajectory.hpp"
#include "stemtune/virtual_scope.hpp"

namespace stemtune {

/// Latin-hypercube design mapped into the search bounds; deterministic per
/// seed, one point per stratum on every axis.
std::vector<std::vector<double>> initial_design(const SearchSpace& space, int n,
                                                std::uint64_t seed);

/// Monte-Carlo EHVI at x over the joint posterior of independent
/// per-objective models.
double ehvi(const std::vector<GPModel>& models, std::span<const RewardVector> front,
            const RewardVector& ref, std::span<const double> x, int mc_samples,
            std::uint64_t seed);

struct Proposal {
  std::vector<double> x;
  double acquisition_value = 0.0;
  bool exploration_fallback = false;  // all-zero EHVI, fell back to max variance
  double seconds = 0.0;
};

/// Seeded random restarts + coordinate pattern search refinement of the top
/// candidates; deterministic, always in bounds.
Proposal propose(const std::vector<GPModel>& models, const ParetoArchive& archive,
                 const SearchSpace& space, const MoboConfig& config,
                 std::uint64_t candidates_seed, std::uint64_t ehvi_seed);

struct MoboResult {
  ParetoArchive archive;
  std::vector<TrajectoryRecord> records;
  bool completed = false;
  std::string error;  // set when the loop stopped on a failed iteration
};

/// The full loop: initial design, then n_iterations of fit / propose /
/// acquire / evaluate / archive / log. Records are appended to `logger`
/// (when given) as they happen; a failed iteration is logged and stops the
/// loop with the partial trajectory preserved.
MoboResult run_mobo(Environment& env, const SearchSpace& space, const MoboConfig& config,
                    const RewardConfig& rewards, std::uint64_t master_seed,
                    RunLogger* logger = nullptr);

}  // namespace stemtune
