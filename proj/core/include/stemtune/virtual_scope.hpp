#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>

#include "stemtune/image.hpp"
#include "stemtune/optics.hpp"

namespace stemtune {

/// Hexagonal two-sublattice specimen built from 2D Gaussian peaks.
struct SpecimenParams {
  struct Site {
    double frac_a = 0.0;  // fractional position along lattice vectors
    double frac_b = 0.0;
    double amplitude = 1.0;
    double width_nm = 0.05;  // Gaussian sigma
  };

  double lattice_constant_nm = 0.315;  // WS2-like
  std::vector<Site> basis = {
      {0.0, 0.0, 1.0, 0.05},
      {1.0 / 3.0, 2.0 / 3.0, 0.6, 0.05},
  };
};

struct Specimen {
  SpecimenParams params;
  Image potential;  // nonnegative, size matches the probe grid
};

/// Two-layer corruption: correlated Gaussian background, then per-pixel
/// Poisson counts at the configured dose.
struct NoiseConfig {
  bool enabled = true;
  double dose = 1e7;                   // expected total counts
  double correlated_amplitude = 0.05;  // fraction of clean-image stddev
  double correlation_length_px = 8.0;
  void validate() const;
};

struct LatencyModel {
  double hw_seconds_per_acquire = 0.0;  // bench profile: 4.0
  bool realtime = false;                // if false, latency is booked, not slept
};

Specimen build_specimen(const SpecimenParams& params, double field_of_view_nm,
                        int grid_size, double pixel_size_nm);

/// Circular convolution of the potential with a maximum-centered PSF.
Image render_clean(const Image& potential, const Image& psf);

Image corrupt(const Image& clean, const NoiseConfig& noise, std::uint64_t seed);

struct Acquisition {
  Image image;
  double hw_seconds = 0.0;  // simulated latency + actual compute
  std::uint64_t seed = 0;
};

/// Anything the MOBO loop can point the beam at.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual Acquisition acquire(const AberrationState& state) = 0;
};

/// The black-box instrument: builds the specimen once, then serves
/// acquire(x) with counter-keyed noise seeds so every exposure is a fresh
/// but reproducible realization.
class VirtualScope final : public Environment {
 public:
  VirtualScope(OpticalConfig optics, SpecimenParams specimen, NoiseConfig noise,
               LatencyModel latency, std::uint64_t master_seed);

  /// Per-coefficient acceptance window; unset means unbounded.
  void set_bounds(const std::array<std::optional<std::pair<double, double>>, kNumCoeffs>& bounds) {
    bounds_ = bounds;
  }

  Acquisition acquire(const AberrationState& state) override;

  const Image& potential() const { return specimen_.potential; }
  const OpticalConfig& optics() const { return optics_; }
  const NoiseConfig& noise() const { return noise_; }
  std::uint64_t calls() const { return counter_; }

 private:
  OpticalConfig optics_;
  Specimen specimen_;
  NoiseConfig noise_;
  LatencyModel latency_;
  std::uint64_t master_seed_;
  std::uint64_t counter_ = 0;
  std::array<std::optional<std::pair<double, double>>, kNumCoeffs> bounds_{};
};

}  // namespace stemtune
