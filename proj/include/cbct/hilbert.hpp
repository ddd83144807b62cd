#pragma once

#include <span>
#include <vector>

namespace cbct {

/// Band-limited discrete Hilbert kernel (1 - cos πn) / (πn), zero at n = 0.
double hilbert_kernel(int n);

/// Taps h[-half..half] stored at index n + half, with a raised-cosine taper
/// over the outermost `taper_fraction` of the taps on each side.
std::vector<double> hilbert_taps(int half, double taper_fraction = 0.1);

/// Periodic Hilbert transform of a real sequence: multiplies each DFT bin by
/// -i sgn(k). DC and (for even length) Nyquist bins are zeroed.
std::vector<double> hilbert_periodic(std::span<const double> x);

/// Linear (aperiodic) convolution of x with taps from hilbert_taps, same length
/// as x. `sign` flips the kernel, e.g. for samples ordered against increasing t.
std::vector<double> hilbert_convolve(std::span<const double> x, std::span<const double> taps, double sign = 1.0);

}  // namespace cbct
