#pragma once

#include <complex>
#include <vector>

namespace stemtune::fft {

using CVec = std::vector<std::complex<double>>;

/// Unnormalized forward 2D DFT of an n x n row-major grid.
CVec fft2(const CVec& in, int n);

/// Inverse 2D DFT, normalized by 1/n^2 (ifft2(fft2(x)) == x).
CVec ifft2(const CVec& in, int n);

/// FFT-order sample frequencies (cycles per unit) for n samples of spacing d.
std::vector<double> fftfreq(int n, double d);

}  // namespace stemtune::fft
