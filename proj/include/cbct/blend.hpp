#pragma once

#include <vector>

#include "cbct/volume.hpp"

namespace cbct {

/// Fourier-domain weights for the coronal reconstruction of an axial slice;
/// the sagittal one receives 1 - w. Bins use FFT ordering.
struct BowTieMask {
  int rows = 0;
  int cols = 0;
  double transition_deg = 10.0;
  std::vector<double> w;  // row-major, rows x cols

  double operator()(int r, int c) const { return w[static_cast<std::size_t>(r) * cols + c]; }
};

/// w = 1 where |ωx| dominates |ωy| by more than the transition band, 0 in the
/// transposed wedge, a raised cosine in angle across the diagonals. The
/// diagonals and the DC bin get exactly 0.5.
BowTieMask make_bowtie_mask(int rows, int cols, double transition_deg);

/// Inverse DFT of w F{f_cor} + (1 - w) F{f_sag}, real part.
SliceImage blend_axial(const SliceImage& f_cor, const SliceImage& f_sag, const BowTieMask& mask);

Volume3D blend_volume(const Volume3D& v_cor, const Volume3D& v_sag, double transition_deg);
Volume3D blend_volume(const Volume3D& v_cor, const Volume3D& v_sag, const BowTieMask& mask);

}  // namespace cbct
