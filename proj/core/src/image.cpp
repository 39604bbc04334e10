#include "stemtune/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace stemtune {

double Image::sum() const { return std::accumulate(data.begin(), data.end(), 0.0); }

double Image::mean() const { return data.empty() ? 0.0 : sum() / data.size(); }

double Image::stddev() const {
  if (data.empty()) return 0.0;
  const double mu = mean();
  double acc = 0.0;
  for (double v : data) acc += (v - mu) * (v - mu);
  return std::sqrt(acc / data.size());
}

double Image::max_value() const {
  return data.empty() ? 0.0 : *std::max_element(data.begin(), data.end());
}

namespace {

double quantization_scale(const Image& image) {
  const double mx = image.max_value();
  return mx > 0.0 ? mx / 65535.0 : 1.0;
}

std::vector<std::uint16_t> quantize(const Image& image, double scale) {
  std::vector<std::uint16_t> q(image.pixel_count());
  for (size_t i = 0; i < q.size(); ++i) {
    const double v = std::clamp(image.data[i] / scale, 0.0, 65535.0);
    q[i] = static_cast<std::uint16_t>(std::lround(v));
  }
  return q;
}

}  // namespace

Image quantize_u16(const Image& image) {
  const double scale = quantization_scale(image);
  const auto q = quantize(image, scale);
  Image out(image.size, image.pixel_size_nm);
  for (size_t i = 0; i < q.size(); ++i) out.data[i] = scale * q[i];
  return out;
}

Image write_pgm16(const std::filesystem::path& pgm_path, const Image& image,
                  const PgmSidecar& sidecar) {
  const double scale = quantization_scale(image);
  const auto q = quantize(image, scale);

  std::ofstream out(pgm_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + pgm_path.string());
  out << "P5\n" << image.size << " " << image.size << "\n65535\n";
  for (std::uint16_t v : q) {
    const unsigned char be[2] = {static_cast<unsigned char>(v >> 8),
                                 static_cast<unsigned char>(v & 0xff)};
    out.write(reinterpret_cast<const char*>(be), 2);
  }
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + pgm_path.string());

  std::filesystem::path side = pgm_path;
  side += ".sidecar";
  std::ofstream meta(side);
  if (!meta) throw std::runtime_error("cannot open " + side.string());
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", scale);
  meta << "scale = " << buf << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", image.pixel_size_nm);
  meta << "pixel_size_nm = " << buf << "\n";
  for (const auto& [k, v] : sidecar.extra) meta << k << " = " << v << "\n";
  meta.flush();
  if (!meta) throw std::runtime_error("write failed: " + side.string());

  Image round_trip(image.size, image.pixel_size_nm);
  for (size_t i = 0; i < q.size(); ++i) round_trip.data[i] = scale * q[i];
  return round_trip;
}

Image read_pgm16(const std::filesystem::path& pgm_path) {
  std::ifstream in(pgm_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + pgm_path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || maxval != 65535 || w != h || w <= 0) {
    throw std::runtime_error("not a 16-bit square PGM: " + pgm_path.string());
  }
  in.get();  // single whitespace after maxval

  double scale = 1.0;
  double pixel_size = 0.0;
  std::filesystem::path side = pgm_path;
  side += ".sidecar";
  std::ifstream meta(side);
  if (!meta) throw std::runtime_error("missing sidecar: " + side.string());
  std::string line;
  while (std::getline(meta, line)) {
    std::istringstream ls(line);
    std::string key, eq, value;
    if (!(ls >> key >> eq >> value) || eq != "=") continue;
    if (key == "scale") scale = std::stod(value);
    if (key == "pixel_size_nm") pixel_size = std::stod(value);
  }

  Image image(w, pixel_size);
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h * 2);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<size_t>(in.gcount()) != raw.size()) {
    throw std::runtime_error("truncated PGM: " + pgm_path.string());
  }
  for (size_t i = 0; i < image.pixel_count(); ++i) {
    const std::uint16_t v =
        static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    image.data[i] = scale * v;
  }
  return image;
}

}  // namespace stemtune
