#include "cbct/blend.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "cbct/dbp.hpp"
#include "cbct/error.hpp"
#include "cbct/fft.hpp"
#include "cbct/parallel.hpp"

namespace cbct {

BowTieMask make_bowtie_mask(int rows, int cols, double transition_deg) {
  require(rows >= 2 && cols >= 2, ErrorKind::Config, "bow-tie mask needs at least 2 x 2 bins");
  require(transition_deg >= 0 && transition_deg < 45, ErrorKind::Config, "transition_deg must lie in [0, 45)");
  BowTieMask m{rows, cols, transition_deg, std::vector<double>(static_cast<std::size_t>(rows) * cols)};
  const double td = transition_deg * std::numbers::pi / 180.0;
  const double quarter = 0.25 * std::numbers::pi;
  for (int r = 0; r < rows; ++r) {
    const double wy = std::abs(fft_frequency(r, rows));
    for (int c = 0; c < cols; ++c) {
      const double wx = std::abs(fft_frequency(c, cols));
      double w;
      if (wx == wy) {
        w = 0.5;  // diagonals and DC
      } else {
        const double phi = std::atan2(wy, wx);  // 0 along the x axis
        if (phi <= quarter - td) {
          w = 1.0;
        } else if (phi >= quarter + td) {
          w = 0.0;
        } else {
          w = 0.5 * (1.0 + std::cos(std::numbers::pi * (phi - quarter + td) / (2.0 * td)));
        }
      }
      m.w[static_cast<std::size_t>(r) * cols + c] = w;
    }
  }
  return m;
}

SliceImage blend_axial(const SliceImage& f_cor, const SliceImage& f_sag, const BowTieMask& mask) {
  require(f_cor.rows == f_sag.rows && f_cor.cols == f_sag.cols, ErrorKind::Config, "slice shapes differ");
  require(mask.rows == f_cor.rows && mask.cols == f_cor.cols, ErrorKind::Config, "mask shape does not match the slice");
  const std::size_t n = f_cor.data.size();
  std::vector<std::complex<double>> a(f_cor.data.begin(), f_cor.data.end());
  std::vector<std::complex<double>> b(f_sag.data.begin(), f_sag.data.end());
  fft2d(a, f_cor.rows, f_cor.cols, false);
  fft2d(b, f_cor.rows, f_cor.cols, false);
  for (std::size_t i = 0; i < n; ++i) a[i] = mask.w[i] * a[i] + (1.0 - mask.w[i]) * b[i];
  fft2d(a, f_cor.rows, f_cor.cols, true);
  SliceImage out = f_cor;
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.data[i] = a[i].real();
    re += a[i].real() * a[i].real();
    im += a[i].imag() * a[i].imag();
  }
  require(std::sqrt(im) <= 1e-6 * std::sqrt(re) + 1e-300, ErrorKind::Solver,
          "blended slice has a non-negligible imaginary part");
  return out;
}

Volume3D blend_volume(const Volume3D& v_cor, const Volume3D& v_sag, double transition_deg) {
  return blend_volume(v_cor, v_sag, make_bowtie_mask(v_cor.ny(), v_cor.nx(), transition_deg));
}

Volume3D blend_volume(const Volume3D& v_cor, const Volume3D& v_sag, const BowTieMask& mask) {
  require(v_cor.shape() == v_sag.shape(), ErrorKind::Config, "volumes to blend differ in shape");
  Volume3D out(v_cor.shape());
  parallel_for(static_cast<std::size_t>(v_cor.nz()), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const SliceImage s = blend_axial(extract_slice(v_cor, SliceAxis::Axial, static_cast<int>(k)),
                                       extract_slice(v_sag, SliceAxis::Axial, static_cast<int>(k)), mask);
      insert_axial_slice(out, static_cast<int>(k), s);
    }
  });
  return out;
}

}  // namespace cbct
