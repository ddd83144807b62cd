#pragma once

#include <string_view>
#include <vector>

#include "cbct/geometry.hpp"
#include "cbct/volume.hpp"

namespace cbct {

enum class StepRule { Fixed, Backtracking };
StepRule parse_step_rule(std::string_view name);

struct MbirConfig {
  double lambda_tv = 0.0;
  int n_iter = 50;
  StepRule step_rule = StepRule::Backtracking;
  double step0 = 0.0;  // <= 0: 1 / |A^T A| from power iteration
  int tv_inner = 10;
  void validate() const;
};

/// 0.5 |y - A f|^2 + lambda (|Dx f|_1 + |Dy f|_1 + |Dz f|_1), forward
/// differences with replicate boundary.
double mbir_objective(const Volume3D& f, const ProjectionSet& y, const ScanGeometry& geom, double lambda_tv);

/// Gradient of the data term, A^T (A f - y).
Volume3D mbir_data_gradient(const Volume3D& f, const ProjectionSet& y, const ScanGeometry& geom);

/// 1e-2 * max |A^T y|.
double default_lambda_tv(const ProjectionSet& y, const ScanGeometry& geom, const GridShape& grid);

/// Largest eigenvalue of A^T A by power iteration.
double projector_normal_norm(const ScanGeometry& geom, const GridShape& grid, const std::vector<double>& lambdas,
                             int iterations = 20);

struct MbirResult {
  Volume3D f;
  std::vector<double> objective;  // start point and every outer iteration
  double final_step = 0.0;
};

/// Proximal gradient: gradient step on the data term, then the anisotropic
/// TV proximal map by dual clipping. Under backtracking the step is halved
/// until the quadratic upper bound holds, and a candidate that would raise
/// the objective is rejected.
MbirResult mbir_reconstruct(const ProjectionSet& y, const ScanGeometry& geom, const MbirConfig& cfg, const Volume3D& f0);

/// Least-squares solution of A f = y by CGLS, starting from zero.
Volume3D cgls_reconstruct(const ProjectionSet& y, const ScanGeometry& geom, const GridShape& grid, int iterations);

}  // namespace cbct
