#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "cbct/geometry.hpp"
#include "cbct/volume.hpp"

namespace cbct {

/// Differentiated backprojection sampled on a plane of interest. Sample
/// (it, iz) lives at g[iz * grid.nt + it].
struct DbpPlane {
  PlaneOfInterest plane;
  ArcSpec arc;
  PlaneGrid grid;
  std::vector<double> g;

  double at(int it, int iz) const { return g[static_cast<std::size_t>(iz) * grid.nt + it]; }
  double& at(int it, int iz) { return g[static_cast<std::size_t>(iz) * grid.nt + it]; }
  void validate() const;
};

/// DBP of the projections restricted to `arc`, evaluated on `grid` of `plane`.
/// Views contribute with trapezoidal weights clipped to the arc; the
/// derivative along the trajectory is taken at fixed ray direction.
DbpPlane compute_dbp(const ProjectionSet& proj, const ScanGeometry& geom, const PlaneOfInterest& plane,
                     const ArcSpec& arc, const PlaneGrid& grid);

/// DBP for every voxel of a grid, for both plane directions and all arcs at
/// once. Because planes coincide with voxel rows, a DBP stack for one
/// direction and arc is itself a volume: coronal plane j is the (i, k) slab at
/// fixed j, sagittal plane i the (j, k) slab at fixed i.
struct DbpVolumes {
  Volume3D full;
  Volume3D coronal_short;
  Volume3D sagittal_short;
  /// 1 where every view sees the voxel on a detector row with data, else 0.
  Volume3D valid;
  /// 1 where every measured ray through the voxel carries a line integral
  /// above the support threshold: a hull that contains a non-negative object.
  Volume3D support;

  Volume3D stack(PlaneDirection direction, ArcKind arc) const;
};

/// `row_limit` restricts which detector rows count as measured (|v| <= row_limit);
/// by default the whole detector is used. `support_threshold` is a fraction
/// of the largest projection value.
DbpVolumes compute_dbp_volumes(const ProjectionSet& proj, const ScanGeometry& geom, const GridShape& grid,
                               std::optional<double> row_limit = std::nullopt, double support_threshold = 3e-2);

/// Extracts plane `index` of a DBP stack as a DbpPlane.
DbpPlane plane_from_stack(const Volume3D& stack, const ScanGeometry& geom, PlaneDirection direction, ArcKind arc,
                          int index);

struct SpectralSignature {
  Vec3 x;
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;
  Vec3 d_minus;
  Vec3 d_plus;
};

/// Unit directions from the two trajectory points of the plane through x to x.
SpectralSignature spectral_signature(const ScanGeometry& geom, const Vec3& x, PlaneDirection direction);

/// iπ (sgn(ω·d−) − sgn(ω·d+)) with sgn(0) = 0. Empty for ω = 0.
std::optional<std::complex<double>> sigma(const SpectralSignature& sig, const Vec3& omega);

/// Bins of a rows x cols axial frequency grid (FFT ordering, cycles per
/// sample) where σ vanishes for the direction's plane through x. `omega_z`
/// sets the axial frequency component shared by every bin. The DC bin is
/// reported as missing.
std::vector<std::uint8_t> missing_frequency_mask(const ScanGeometry& geom, const Vec3& x, PlaneDirection direction,
                                                 int rows, int cols, double omega_z);

/// Signed FFT bin frequency k/n in cycles per sample.
double fft_frequency(int k, int n);

}  // namespace cbct
