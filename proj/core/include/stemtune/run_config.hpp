#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "stemtune/optics.hpp"
#include "stemtune/rewards.hpp"
#include "stemtune/search_space.hpp"
#include "stemtune/virtual_scope.hpp"

namespace stemtune {

struct MoboConfig {
  int n_init = 0;  // 0 resolves to 2d + 2
  int n_iterations = 25;
  int mc_samples = 128;
  int acq_restarts = 256;
  int acq_refine_top = 5;
  void validate() const;
  int resolved_n_init(int dim) const { return n_init > 0 ? n_init : 2 * dim + 2; }
};

/// Everything a run needs, resolvable to defaults, serializable to the
/// key = value snapshot that gets logged alongside every output.
struct RunConfig {
  OpticalConfig optics;
  SpecimenParams specimen;
  NoiseConfig noise;
  RewardConfig rewards;
  SearchSpace space = SearchSpace::first_order();
  MoboConfig mobo;
  LatencyModel latency;
  std::uint64_t seed = 1;

  void validate() const;

  /// "desk": zero simulated latency. "bench": 4 s/acquire, recorded.
  void apply_profile(const std::string& profile);

  std::string to_snapshot() const;
  static RunConfig from_snapshot(const std::string& text);
  static RunConfig from_file(const std::filesystem::path& path);
};

}  // namespace stemtune
