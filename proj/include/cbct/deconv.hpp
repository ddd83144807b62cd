#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cbct/dbp.hpp"
#include "cbct/geometry.hpp"
#include "cbct/volume.hpp"

namespace cbct {

/// Linear model of the DBP of a plane of interest: for each arc, g(t, z) is
/// ±π times the Hilbert transform along t of f summed over the two lines that
/// join (t, z) to the trajectory points a(λ−) and a(λ+). The short arc takes
/// the minus sign and the complementary arc the plus sign.
///
/// Applied matrix-free: f is resampled onto the fan of lines through each
/// source point, Hilbert-filtered along t, and sampled back at (t, z). Every
/// step is a linear map with an explicit transpose, so the adjoint is exact.
class PlaneSystem {
 public:
  PlaneSystem(const PlaneOfInterest& plane, std::vector<ArcSpec> arcs, const PlaneGrid& grid);

  const PlaneOfInterest& plane() const { return plane_; }
  const std::vector<ArcSpec>& arcs() const { return arcs_; }
  const PlaneGrid& grid() const { return grid_; }
  std::size_t cols() const { return grid_.size(); }
  std::size_t rows() const { return arcs_.size() * grid_.size(); }

  /// 0/1 (or fractional) weights on the measurements of every arc; empty means all ones.
  void set_row_weights(std::vector<double> w);
  const std::vector<double>& row_weights() const { return row_weights_; }
  /// 0/1 mask on the unknowns; pixels outside it are held at zero. Empty means no mask.
  void set_support(std::vector<double> s);
  const std::vector<double>& support() const { return support_; }

  std::vector<double> apply(const std::vector<double>& f) const;
  std::vector<double> apply_adjoint(const std::vector<double>& g) const;
  /// A^T A f, sharing the single unsigned operator between arcs.
  std::vector<double> normal(const std::vector<double>& f) const;
  /// Unweighted single-arc model (sign of the short arc).
  std::vector<double> core(const std::vector<double>& f) const;
  std::vector<double> core_adjoint(const std::vector<double>& g) const;
  /// Largest eigenvalue of A^T A by power iteration.
  double normal_norm(int iterations = 30) const;

 private:
  struct Fan;
  PlaneOfInterest plane_;
  std::vector<ArcSpec> arcs_;
  std::vector<double> signs_;
  PlaneGrid grid_;
  std::vector<double> row_weights_;
  std::vector<double> support_;
  std::shared_ptr<const Fan> fans_[2];
  std::shared_ptr<const std::vector<double>> toeplitz_;  // nt x nt, row-major, includes π and orientation
};

PlaneSystem build_plane_system(const ScanGeometry& geom, const PlaneOfInterest& plane, std::vector<ArcSpec> arcs,
                               const PlaneGrid& grid);

enum class Regularizer { Tikhonov, Tv };
Regularizer parse_regularizer(std::string_view name);
const char* to_string(Regularizer r);

struct DeconvConfig {
  Regularizer regularizer = Regularizer::Tikhonov;
  double reg_weight = 1e-3;  // relative to the largest eigenvalue of A^T A
  int max_iter = 200;
  double cg_tol = 1e-6;
  int tv_inner = 10;
  void validate() const;
};

struct DeconvResult {
  std::vector<double> f;  // nt * nz, t fastest
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective;  // per iteration, including the start point
};

/// Minimizes |A f - g|^2 + mu R(f) with mu = reg_weight * |A^T A|. `g` stacks
/// one DBP plane per arc of the system, in the same order.
DeconvResult deconvolve_plane(const PlaneSystem& sys, const std::vector<double>& g, const DeconvConfig& cfg);
DeconvResult deconvolve_plane(const PlaneSystem& sys, const std::vector<DbpPlane>& g, const DeconvConfig& cfg);

/// Maps the DBP planes of one plane of interest (one per arc) to an image.
class DeconvOperator {
 public:
  virtual ~DeconvOperator() = default;
  virtual std::vector<double> invert(const PlaneSystem& sys, const std::vector<double>& g) const = 0;
};

class RegularizedInversion : public DeconvOperator {
 public:
  explicit RegularizedInversion(DeconvConfig cfg) : cfg_(cfg) {}
  std::vector<double> invert(const PlaneSystem& sys, const std::vector<double>& g) const override;

 private:
  DeconvConfig cfg_;
};

/// Runs `<command> <in_stem> <out_stem>` per plane. The input is an image
/// (rows = arcs * nz, cols = nt) with plane metadata; the command must write
/// an nz x nt image at out_stem.
class ExternalOperator : public DeconvOperator {
 public:
  ExternalOperator(std::string command, std::string work_dir);
  std::vector<double> invert(const PlaneSystem& sys, const std::vector<double>& g) const override;

 private:
  std::string command_;
  std::string work_dir_;
};

/// Stacks one nt x nz image per plane back into the volume grid.
Volume3D assemble_volume(const std::vector<std::vector<double>>& planes, PlaneDirection direction,
                         const GridShape& shape);
std::vector<std::vector<double>> disassemble_volume(const Volume3D& vol, PlaneDirection direction);

/// Deconvolves every plane of one direction from its DBP stacks (one per arc).
/// Voxels with valid == 0 are excluded from the data term; voxels with
/// support == 0 are held at zero. Either mask may be null.
Volume3D deconvolve_direction(const std::vector<Volume3D>& stacks, const std::vector<ArcKind>& arcs,
                              const Volume3D* valid, const Volume3D* support, const ScanGeometry& geom,
                              PlaneDirection direction, const DeconvOperator& op);

}  // namespace cbct
