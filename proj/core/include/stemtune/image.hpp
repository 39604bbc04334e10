#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace stemtune {

/// Square 2D intensity grid. Values are nonnegative by convention; pixel
/// calibration rides along so downstream code never guesses units.
struct Image {
  int size = 0;  // pixels per side
  double pixel_size_nm = 0.0;
  std::vector<double> data;  // row-major, size * size

  Image() = default;
  Image(int n, double px) : size(n), pixel_size_nm(px), data(static_cast<size_t>(n) * n, 0.0) {}

  double& at(int y, int x) { return data[static_cast<size_t>(y) * size + x]; }
  double at(int y, int x) const { return data[static_cast<size_t>(y) * size + x]; }
  size_t pixel_count() const { return data.size(); }

  double sum() const;
  double mean() const;
  /// Population standard deviation.
  double stddev() const;
  double max_value() const;
};

/// 16-bit big-endian PGM dump with a key=value sidecar recording the linear
/// rescale and acquisition metadata. write_pgm16 returns the image as it will
/// read back (quantized), so callers can keep logs bit-consistent with disk.
struct PgmSidecar {
  double scale = 1.0;  // intensity = scale * u16
  std::map<std::string, std::string> extra;
};

Image write_pgm16(const std::filesystem::path& pgm_path, const Image& image,
                  const PgmSidecar& sidecar);
Image read_pgm16(const std::filesystem::path& pgm_path);

/// Pure quantization round-trip, identical to a disk dump + reload.
Image quantize_u16(const Image& image);

}  // namespace stemtune
