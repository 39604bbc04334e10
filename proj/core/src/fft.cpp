#include "stemtune/fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <stdexcept>

namespace stemtune::fft {

namespace {

CVec transform(const CVec& in, int n, int sign) {
  if (static_cast<int>(in.size()) != n * n) {
    throw std::invalid_argument("fft2: buffer size does not match grid");
  }
  CVec out(in.size());
  // FFTW may scribble on the input buffer during planning with ESTIMATE, so
  // plan against the output and copy afterwards.
  auto* buf = reinterpret_cast<fftw_complex*>(out.data());
  std::memcpy(out.data(), in.data(), in.size() * sizeof(std::complex<double>));
  fftw_plan plan = fftw_plan_dft_2d(n, n, buf, buf, sign, FFTW_ESTIMATE);
  fftw_execute(plan);
  fftw_destroy_plan(plan);
  return out;
}

}  // namespace

CVec fft2(const CVec& in, int n) { return transform(in, n, FFTW_FORWARD); }

CVec ifft2(const CVec& in, int n) {
  CVec out = transform(in, n, FFTW_BACKWARD);
  const double norm = 1.0 / (static_cast<double>(n) * n);
  for (auto& v : out) v *= norm;
  return out;
}

std::vector<double> fftfreq(int n, double d) {
  std::vector<double> f(n);
  const double step = 1.0 / (n * d);
  for (int i = 0; i < n; ++i) {
    const int k = i <= (n - 1) / 2 ? i : i - n;
    f[i] = k * step;
  }
  return f;
}

}  // namespace stemtune::fft
