#include "cbct/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "cbct/error.hpp"
#include "cbct/fft.hpp"

namespace cbct {

double hilbert_kernel(int n) {
  if (n == 0) return 0.0;
  if (n % 2 == 0) return 0.0;
  return 2.0 / (std::numbers::pi * n);
}

std::vector<double> hilbert_taps(int half, double taper_fraction) {
  require(half >= 1, ErrorKind::Config, "Hilbert kernel needs at least one tap per side");
  require(taper_fraction >= 0 && taper_fraction <= 1, ErrorKind::Config, "taper fraction must lie in [0, 1]");
  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  const double ntaper = taper_fraction * half;
  const double start = half - ntaper;
  for (int n = -half; n <= half; ++n) {
    double w = 1.0;
    const double a = std::abs(n);
    if (ntaper > 0 && a > start) w = 0.5 * (1.0 + std::cos(std::numbers::pi * (a - start) / (ntaper + 1.0)));
    taps[n + half] = w * hilbert_kernel(n);
  }
  return taps;
}

std::vector<double> hilbert_periodic(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  std::vector<std::complex<double>> buf(x.begin(), x.end());
  if (n == 0) return {};
  fft2d(buf, 1, n, false);
  for (int k = 0; k < n; ++k) {
    const int freq = k <= (n - 1) / 2 ? k : k - n;
    if (k == 0 || (n % 2 == 0 && k == n / 2)) {
      buf[k] = 0.0;
    } else {
      buf[k] *= std::complex<double>(0.0, freq > 0 ? -1.0 : 1.0);
    }
  }
  fft2d(buf, 1, n, true);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[k] = buf[k].real();
  return out;
}

std::vector<double> hilbert_convolve(std::span<const double> x, std::span<const double> taps, double sign) {
  const int n = static_cast<int>(x.size());
  const int half = static_cast<int>(taps.size() / 2);
  std::vector<double> out(x.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    const int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
    for (int j = lo; j <= hi; ++j) acc += taps[i - j + half] * x[j];
    out[i] = sign * acc;
  }
  return out;
}

}  // namespace cbct
