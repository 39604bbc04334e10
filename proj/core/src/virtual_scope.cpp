#include "stemtune/virtual_scope.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "stemtune/errors.hpp"
#include "stemtune/fft.hpp"
#include "stemtune/rng.hpp"

namespace stemtune {

void NoiseConfig::validate() const {
  if (!(dose > 0.0)) throw ConfigError("noise: dose must be > 0");
  if (correlated_amplitude < 0.0) throw ConfigError("noise: correlated amplitude must be >= 0");
  if (correlation_length_px < 1.0) throw ConfigError("noise: correlation length must be >= 1");
}

Specimen build_specimen(const SpecimenParams& params, double field_of_view_nm,
                        int grid_size, double pixel_size_nm) {
  const double a = params.lattice_constant_nm;
  if (!(a > 0.0)) throw std::invalid_argument("specimen: lattice constant must be > 0");
  if (field_of_view_nm < a) {
    throw std::invalid_argument("specimen: field of view smaller than one unit cell");
  }

  // Hexagonal lattice vectors.
  const double a1x = a, a1y = 0.0;
  const double a2x = 0.5 * a, a2y = 0.5 * std::sqrt(3.0) * a;

  Image grid(grid_size, pixel_size_nm);
  const double fov = field_of_view_nm;

  for (const auto& site : params.basis) {
    const double sigma = site.width_nm;
    const double margin = 4.0 * sigma;
    // Index ranges covering [−margin, fov + margin] in both directions.
    const int j_lo = static_cast<int>(std::floor((-margin) / a2y - site.frac_b)) - 1;
    const int j_hi = static_cast<int>(std::ceil((fov + margin) / a2y - site.frac_b)) + 1;
    for (int j = j_lo; j <= j_hi; ++j) {
      const double cb = j + site.frac_b;
      const double y = cb * a2y;
      if (y < -margin || y > fov + margin) continue;
      const double x_off = cb * a2x;
      const int i_lo =
          static_cast<int>(std::floor((-margin - x_off) / a1x - site.frac_a)) - 1;
      const int i_hi =
          static_cast<int>(std::ceil((fov + margin - x_off) / a1x - site.frac_a)) + 1;
      for (int i = i_lo; i <= i_hi; ++i) {
        const double x = (i + site.frac_a) * a1x + x_off;
        if (x < -margin || x > fov + margin) continue;
        // Rasterize one Gaussian peak over its 4-sigma box.
        const int px_lo = std::max(0, static_cast<int>((x - margin) / pixel_size_nm));
        const int px_hi =
            std::min(grid_size - 1, static_cast<int>((x + margin) / pixel_size_nm) + 1);
        const int py_lo = std::max(0, static_cast<int>((y - margin) / pixel_size_nm));
        const int py_hi =
            std::min(grid_size - 1, static_cast<int>((y + margin) / pixel_size_nm) + 1);
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        for (int py = py_lo; py <= py_hi; ++py) {
          const double dy = py * pixel_size_nm - y;
          for (int px = px_lo; px <= px_hi; ++px) {
            const double dx = px * pixel_size_nm - x;
            grid.at(py, px) += site.amplitude * std::exp(-(dx * dx + dy * dy) * inv2s2);
          }
        }
      }
    }
  }
  return Specimen{params, std::move(grid)};
}

Image render_clean(const Image& potential, const Image& psf) {
  const int n = potential.size;
  if (psf.size != n) {
    throw std::invalid_argument("render_clean: specimen and PSF grids differ");
  }
  // PSF arrives maximum-centered; move its origin to (0, 0) so the circular
  // convolution does not translate the image.
  fft::CVec kernel(static_cast<size_t>(n) * n);
  const int half = n / 2;
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      kernel[static_cast<size_t>(iy) * n + ix] = psf.at((iy + half) % n, (ix + half) % n);
    }
  }
  fft::CVec spec(static_cast<size_t>(n) * n);
  for (size_t i = 0; i < spec.size(); ++i) spec[i] = potential.data[i];

  const fft::CVec product_src = fft::fft2(spec, n);
  fft::CVec kernel_f = fft::fft2(kernel, n);
  for (size_t i = 0; i < kernel_f.size(); ++i) kernel_f[i] *= product_src[i];
  const fft::CVec conv = fft::ifft2(kernel_f, n);

  Image out(n, potential.pixel_size_nm);
  for (size_t i = 0; i < out.pixel_count(); ++i) {
    out.data[i] = std::max(0.0, conv[i].real());
  }
  return out;
}

Image corrupt(const Image& clean, const NoiseConfig& noise, std::uint64_t seed) {
  noise.validate();
  if (!noise.enabled) return clean;

  const int n = clean.size;
  rng::Stream stream(seed);
  Image work = clean;

  if (noise.correlated_amplitude > 0.0) {
    // White field shaped by a Gaussian low-pass of width 1/correlation_length.
    fft::CVec white(static_cast<size_t>(n) * n);
    for (auto& v : white) v = stream.gaussian();
    fft::CVec shaped = fft::fft2(white, n);
    const auto freq = fft::fftfreq(n, 1.0);  // cycles per pixel
    const double L = noise.correlation_length_px;
    for (int iy = 0; iy < n; ++iy) {
      for (int ix = 0; ix < n; ++ix) {
        const double f2 = freq[ix] * freq[ix] + freq[iy] * freq[iy];
        shaped[static_cast<size_t>(iy) * n + ix] *=
            std::exp(-2.0 * M_PI * M_PI * L * L * f2);
      }
    }
    shaped = fft::ifft2(shaped, n);

    double mean = 0.0;
    for (const auto& v : shaped) mean += v.real();
    mean /= shaped.size();
    double var = 0.0;
    for (const auto& v : shaped) var += (v.real() - mean) * (v.real() - mean);
    const double field_std = std::sqrt(var / shaped.size());
    const double target_std = noise.correlated_amplitude * clean.stddev();
    const double gain = field_std > 0.0 ? target_std / field_std : 0.0;
    for (size_t i = 0; i < work.pixel_count(); ++i) {
      work.data[i] += gain * (shaped[i].real() - mean);
    }
  }

  for (auto& v : work.data) v = std::max(0.0, v);
  const double total = work.sum();
  const double scale = total > 0.0 ? noise.dose / total : 0.0;

  Image out(n, clean.pixel_size_nm);
  for (size_t i = 0; i < out.pixel_count(); ++i) {
    out.data[i] = static_cast<double>(stream.poisson(scale * work.data[i]));
  }
  return out;
}

VirtualScope::VirtualScope(OpticalConfig optics, SpecimenParams specimen, NoiseConfig noise,
                           LatencyModel latency, std::uint64_t master_seed)
    : optics_(optics),
      noise_(noise),
      latency_(latency),
      master_seed_(master_seed) {
  optics_.validate();
  noise_.validate();
  if (latency_.hw_seconds_per_acquire < 0.0) {
    throw ConfigError("latency: seconds per acquire must be >= 0");
  }
  specimen_ = build_specimen(specimen, optics_.field_of_view_nm(), optics_.grid_size,
                             optics_.pixel_size_nm);
}

Acquisition VirtualScope::acquire(const AberrationState& state) {
  state.validate();
  for (int i = 0; i < kNumCoeffs; ++i) {
    if (!bounds_[i]) continue;
    const auto [lo, hi] = *bounds_[i];
    if (state.nm[i] < lo || state.nm[i] > hi) {
      throw OutOfBounds(std::string("coefficient ") + kCoeffNames[i] + " = " +
                        std::to_string(state.nm[i]) + " outside [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + "]");
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t seed = rng::derive_seed(master_seed_, counter_, /*role=*/1);
  ++counter_;

  const Image psf = probe_psf(state, optics_);
  const Image clean = render_clean(specimen_.potential, psf);
  Image noisy = corrupt(clean, noise_, seed);

  const double compute_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (latency_.realtime && latency_.hw_seconds_per_acquire > 0.0) {
    std::this_thread::sleep_for(
        std::chrono::duration<double>(latency_.hw_seconds_per_acquire));
  }
  return Acquisition{std::move(noisy), latency_.hw_seconds_per_acquire + compute_s, seed};
}

}  // namespace stemtune
