#include "stemtune/optics.hpp"

#include <cmath>

#include "stemtune/errors.hpp"
#include "stemtune/fft.hpp"

namespace stemtune {

std::optional<Coeff> coeff_from_name(std::string_view name) {
  for (int i = 0; i < kNumCoeffs; ++i) {
    if (name == kCoeffNames[i]) return static_cast<Coeff>(i);
  }
  return std::nullopt;
}

bool AberrationState::is_zero() const {
  for (double v : nm) {
    if (v != 0.0) return false;
  }
  return true;
}

void AberrationState::validate() const {
  for (int i = 0; i < kNumCoeffs; ++i) {
    if (!std::isfinite(nm[i])) {
      throw std::invalid_argument(std::string("non-finite coefficient ") + kCoeffNames[i]);
    }
  }
}

double electron_wavelength_pm(double voltage_kv) {
  if (!(voltage_kv > 0.0)) {
    throw std::invalid_argument("voltage must be positive");
  }
  constexpr double h = 6.62607015e-34;       // J s
  constexpr double m0 = 9.1093837015e-31;    // kg
  constexpr double e = 1.602176634e-19;      // C
  constexpr double c = 2.99792458e8;         // m/s
  const double eV = e * voltage_kv * 1e3;    // J
  const double lambda_m = h / std::sqrt(2.0 * m0 * eV * (1.0 + eV / (2.0 * m0 * c * c)));
  return lambda_m * 1e12;
}

double OpticalConfig::wavelength_pm() const { return electron_wavelength_pm(voltage_kv); }

void OpticalConfig::validate() const {
  if (!(voltage_kv > 0.0)) throw ConfigError("optics: voltage must be > 0");
  if (!(convergence_mrad > 0.0)) throw ConfigError("optics: convergence angle must be > 0");
  if (!(pixel_size_nm > 0.0)) throw ConfigError("optics: pixel size must be > 0");
  if (grid_size < 8 || (grid_size & (grid_size - 1)) != 0) {
    throw ConfigError("optics: grid size must be a power of two >= 8");
  }
  const double lambda = wavelength_nm();
  if (!(std::isfinite(lambda) && lambda > 0.0)) {
    throw ConfigError("optics: wavelength is not finite");
  }
  // Aperture cutoff in reciprocal space must sit strictly inside Nyquist.
  const double k_aperture = aperture_rad() / lambda;       // 1/nm
  const double k_nyquist = 0.5 / pixel_size_nm;            // 1/nm
  if (!(k_aperture < k_nyquist)) {
    throw ConfigError("optics: aperture exceeds the grid Nyquist limit");
  }
}

double chi(double alpha_rad, double phi_rad, const AberrationState& state,
           const OpticalConfig& config) {
  const double a2 = alpha_rad * alpha_rad;
  const double a3 = a2 * alpha_rad;
  const double first =
      0.5 * a2 *
      (state[Coeff::c10] + state[Coeff::c12a] * std::cos(2.0 * phi_rad) +
       state[Coeff::c12b] * std::sin(2.0 * phi_rad));
  const double second =
      (a3 / 3.0) *
      (state[Coeff::c21a] * std::cos(phi_rad) + state[Coeff::c21b] * std::sin(phi_rad) +
       state[Coeff::c23a] * std::cos(3.0 * phi_rad) +
       state[Coeff::c23b] * std::sin(3.0 * phi_rad));
  return 2.0 * M_PI / config.wavelength_nm() * (first + second);
}

Image probe_psf(const AberrationState& state, const OpticalConfig& config) {
  config.validate();
  state.validate();

  const int n = config.grid_size;
  const double lambda = config.wavelength_nm();
  const double alpha_max = config.aperture_rad();
  const auto freq = fft::fftfreq(n, config.pixel_size_nm);

  fft::CVec aperture_wave(static_cast<size_t>(n) * n, {0.0, 0.0});
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const double kx = freq[ix];
      const double ky = freq[iy];
      const double alpha = lambda * std::hypot(kx, ky);
      if (alpha > alpha_max) continue;
      const double phi = std::atan2(ky, kx);
      const double phase = chi(alpha, phi, state, config);
      aperture_wave[static_cast<size_t>(iy) * n + ix] =
          std::polar(1.0, -phase);
    }
  }

  const fft::CVec probe = fft::ifft2(aperture_wave, n);

  Image psf(n, config.pixel_size_nm);
  double total = 0.0;
  for (size_t i = 0; i < psf.pixel_count(); ++i) {
    const double v = std::norm(probe[i]);
    psf.data[i] = v;
    total += v;
  }
  // Center the maximum: the IFFT puts the unaberrated peak at (0, 0).
  Image centered(n, config.pixel_size_nm);
  const int half = n / 2;
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      centered.at((iy + half) % n, (ix + half) % n) = psf.at(iy, ix) / total;
    }
  }
  return centered;
}

}  // namespace stemtune
