#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "stemtune/image.hpp"

namespace stemtune {

inline constexpr int kNumCoeffs = 7;

/// Tunable aberration coefficients: defocus, two-fold astigmatism (a/b),
/// axial coma (a/b), three-fold astigmatism (a/b). All in nanometers.
enum class Coeff : int { c10 = 0, c12a, c12b, c21a, c21b, c23a, c23b };

inline constexpr std::array<const char*, kNumCoeffs> kCoeffNames = {
    "c10", "c12a", "c12b", "c21a", "c21b", "c23a", "c23b"};

std::optional<Coeff> coeff_from_name(std::string_view name);

/// The optimizer's action x. Active flags select which coefficients a run
/// tunes (3, 4 or 7 of them); inactive ones stay at whatever they hold.
struct AberrationState {
  std::array<double, kNumCoeffs> nm{};
  std::array<bool, kNumCoeffs> active{};

  double& operator[](Coeff c) { return nm[static_cast<int>(c)]; }
  double operator[](Coeff c) const { return nm[static_cast<int>(c)]; }

  bool is_zero() const;
  void validate() const;  // throws on non-finite coefficients
};

struct OpticalConfig {
  double voltage_kv = 60.0;
  double convergence_mrad = 30.0;
  int grid_size = 128;  // power of two
  double pixel_size_nm = 0.02;

  double wavelength_pm() const;
  double wavelength_nm() const { return wavelength_pm() * 1e-3; }
  double aperture_rad() const { return convergence_mrad * 1e-3; }
  double field_of_view_nm() const { return grid_size * pixel_size_nm; }

  /// Throws ConfigError unless the aperture cutoff sits strictly inside the
  /// grid's Nyquist limit and all parameters are physical.
  void validate() const;
};

/// Relativistic electron de Broglie wavelength.
double electron_wavelength_pm(double voltage_kv);

/// Aberration phase chi(alpha, phi) in radians; linear in the coefficients.
double chi(double alpha_rad, double phi_rad, const AberrationState& state,
           const OpticalConfig& config);

/// Probe intensity |IFFT(A exp(-i chi))|^2, unit sum, maximum-centered grid.
Image probe_psf(const AberrationState& state, const OpticalConfig& config);

}  // namespace stemtune
