#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cbct/geometry.hpp"
#include "cbct/volume.hpp"

namespace cbct {

/// View angles for an arc: a full turn uses j * 2π / n; partial arcs are
/// sampled uniformly including both endpoints, starting in [0, 2π).
std::vector<double> arc_lambdas(const ArcSpec& arc, int n_views);

/// Line integral of the trilinearly interpolated volume along the line
/// through `source` with unit direction `dir`, by midpoint ray marching with
/// step <= half the smallest voxel spacing.
double project_ray(const Volume3D& vol, const Vec3& source, const Vec3& dir);

ProjectionSet forward_project(const Volume3D& vol, const ScanGeometry& geom, const ArcSpec& arc);
ProjectionSet forward_project(const Volume3D& vol, const ScanGeometry& geom, std::span<const double> lambdas);
/// Projects into an existing set, reusing its angles and detector layout.
void forward_project_into(const Volume3D& vol, const ScanGeometry& geom, ProjectionSet& out);

enum class BackprojectionWeights {
  None,  // exact transpose of forward_project
  Fdk,   // voxel-driven, bilinear detector lookup, (R/U)^2 distance weight
};

Volume3D back_project(const ProjectionSet& proj, const ScanGeometry& geom, const GridShape& grid,
                      BackprojectionWeights weights);

struct NoiseSpec {
  double i0 = 5e5;  // unattenuated photon count per detector cell
  std::uint64_t seed = 0;
  int realizations = 1;
  void validate() const;
};

/// Replaces each line integral p by -ln(max(n, 1) / I0) with n ~ Poisson(I0 e^-p).
/// Each view draws from its own stream seeded by (seed, realization, view),
/// so the result does not depend on the worker count.
ProjectionSet add_poisson_noise(const ProjectionSet& proj, const NoiseSpec& noise, int realization = 0);

/// 10 log10(|clean|^2 / |clean - noisy|^2); +infinity when the sets are identical.
double measure_snr(const ProjectionSet& clean, const ProjectionSet& noisy);

/// Zeroes detector rows whose |v| exceeds D tan(half_angle).
void mask_detector_rows(ProjectionSet& proj, const ScanGeometry& geom, double half_angle);

}  // namespace cbct
