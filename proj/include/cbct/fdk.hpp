#pragma once

#include <string_view>
#include <vector>

#include "cbct/geometry.hpp"
#include "cbct/volume.hpp"

namespace cbct {

enum class RampWindow { RamLak, SheppLogan };
RampWindow parse_ramp_window(std::string_view name);

struct FdkConfig {
  RampWindow filter = RampWindow::RamLak;
  double cutoff = 1.0;  // fraction of Nyquist, (0, 1]
  bool short_scan = false;
  void validate() const;
};

/// Frequency response (bins 0..P/2) of the band-limited ramp filter for
/// sample spacing `du`, including the du quadrature factor and the window.
std::vector<double> ramp_response(int padded_length, double du, const FdkConfig& cfg);

/// Cosine weighting and zero-padded row ramp filtering of every view, in place.
void fdk_filter_projections(ProjectionSet& proj, const ScanGeometry& geom, const FdkConfig& cfg);

/// Feldkamp-Davis-Kress reconstruction from a uniformly sampled full scan.
Volume3D fdk_reconstruct(const ProjectionSet& proj, const ScanGeometry& geom, const FdkConfig& cfg,
                         const GridShape& grid);

}  // namespace cbct
