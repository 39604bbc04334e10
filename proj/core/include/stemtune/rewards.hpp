#pragma once

#include "stemtune/image.hpp"

namespace stemtune {

struct RewardVector {
  double contrast = 0.0;
  double fft = 0.0;

  bool operator==(const RewardVector&) const = default;
};

struct FftMaskConfig {
  double dc_radius_px = 3.0;  // bins, around the zero-frequency bin
  void validate(int grid_size) const;
};

struct RewardConfig {
  double epsilon = 1e-8;
  double dc_radius_per_64 = 3.0;  // mask radius scales with grid size

  FftMaskConfig mask_for(int grid_size) const {
    return {dc_radius_per_64 * grid_size / 64.0};
  }
};

/// Normalized image variance: population sigma / (mu + epsilon).
double contrast_reward(const Image& image, double epsilon = 1e-8);

/// Mean over all frequency bins of log(1 + |F|) with a DC-blocking disk mask.
double fft_reward(const Image& image, const FftMaskConfig& mask);

RewardVector evaluate(const Image& image, const RewardConfig& config = {});

}  // namespace stemtune
