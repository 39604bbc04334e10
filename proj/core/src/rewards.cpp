#include "stemtune/rewards.hpp"

#include <cmath>
#include <stdexcept>

#include "stemtune/errors.hpp"
#include "stemtune/fft.hpp"

namespace stemtune {

void FftMaskConfig::validate(int grid_size) const {
  if (dc_radius_px < 1.0 || dc_radius_px >= grid_size / 4.0) {
    throw ConfigError("fft mask: dc radius must satisfy 1 <= r < grid/4");
  }
}

double contrast_reward(const Image& image, double epsilon) {
  if (image.data.empty()) throw std::invalid_argument("contrast_reward: empty image");
  return image.stddev() / (image.mean() + epsilon);
}

double fft_reward(const Image& image, const FftMaskConfig& mask) {
  if (image.data.empty()) throw std::invalid_argument("fft_reward: empty image");
  const int n = image.size;
  mask.validate(n);

  fft::CVec buf(image.pixel_count());
  for (size_t i = 0; i < buf.size(); ++i) buf[i] = image.data[i];
  const fft::CVec spectrum = fft::fft2(buf, n);

  // Disk of dc_radius around the zero-frequency bin, evaluated in wrapped
  // index space (equivalent to masking the centered spectrum).
  const double r2 = mask.dc_radius_px * mask.dc_radius_px;
  double acc = 0.0;
  for (int iy = 0; iy < n; ++iy) {
    const int dy = iy <= n / 2 ? iy : n - iy;
    for (int ix = 0; ix < n; ++ix) {
      const int dx = ix <= n / 2 ? ix : n - ix;
      if (dx * dx + dy * dy <= r2) continue;
      acc += std::log1p(std::abs(spectrum[static_cast<size_t>(iy) * n + ix]));
    }
  }
  // Arithmetic mean over all bins; masked bins contribute zero.
  return acc / image.pixel_count();
}

RewardVector evaluate(const Image& image, const RewardConfig& config) {
  return {contrast_reward(image, config.epsilon),
          fft_reward(image, config.mask_for(image.size))};
}

}  // namespace stemtune
