#pragma once

#include <filesystem>
#include <vector>

#include "stemtune/pareto.hpp"
#include "stemtune/run_config.hpp"

namespace stemtune {

/// Exhaustive landscape over the active axes: levels^d vertices, both
/// rewards at each. Guards the power-law blowup with an evaluation cap.
struct GridResult {
  std::vector<std::vector<double>> points;  // one coordinate vector per row
  std::vector<RewardVector> rewards;
  std::vector<int> front;  // indices into points
};

inline constexpr int kGridEvalCap = 20000;

GridResult grid_evaluate(const RunConfig& config, int levels_per_axis);

void write_landscape_csv(const std::filesystem::path& path, const SearchSpace& space,
                         const GridResult& result);
void write_grid_pareto_csv(const std::filesystem::path& path, const SearchSpace& space,
                           const GridResult& result);

}  // namespace stemtune
