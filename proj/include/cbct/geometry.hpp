#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cbct/vec3.hpp"
#include "cbct/volume.hpp"

namespace cbct {

/// Circular cone-beam acquisition with a flat panel centered on the
/// source-isocenter ray. The detector u axis follows the trajectory tangent,
/// the v axis follows +z.
struct ScanGeometry {
  double source_radius = 500.0;     // R, source to isocenter (mm)
  double source_detector = 1000.0;  // D, source to detector (mm)
  int nu = 256;
  int nv = 256;
  double pitch = 2.0;  // mm
  int n_views = 360;
  std::optional<double> declared_cone_deg;  // optional half cone angle to cross-check

  double half_cone_angle() const;  // radians, atan(nv * pitch / 2 / D)
  double half_fan_angle() const;   // radians, atan(nu * pitch / 2 / D)
  /// Radius of the cylinder seen by every view.
  double fov_radius() const;
  void validate() const;
};

/// Named presets: "aapm-sim", "head-real", "desk", "mini".
ScanGeometry geometry_preset(std::string_view name);
std::vector<std::string> geometry_preset_names();

Vec3 source_position(const ScanGeometry& geom, double lambda);
Vec3 virtual_source(const ScanGeometry& geom, double lambda, double z);

/// Per-view detector frame: source point, unit vector toward the isocenter
/// along the central ray, and the in-plane detector u axis.
struct ViewFrame {
  Vec3 source;
  Vec3 central;  // (-cos λ, -sin λ, 0)
  Vec3 u_axis;   // (-sin λ, cos λ, 0)
};
ViewFrame view_frame(const ScanGeometry& geom, double lambda);

double wrap_angle(double lambda);  // into [0, 2π)

enum class PlaneDirection { Coronal, Sagittal };
PlaneDirection parse_direction(std::string_view name);
const char* to_string(PlaneDirection d);

/// A plane parallel to z that cuts the trajectory at a(lambda_minus) and
/// a(lambda_plus). Chord coordinates (t, z) are measured from the foot point
/// chord_offset * e_perp along e and e_z. Coronal planes are y = s and
/// sagittal planes are x = s in world coordinates.
struct PlaneOfInterest {
  PlaneDirection direction = PlaneDirection::Coronal;
  double s = 0.0;
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;
  Vec3 e;
  Vec3 e_perp;
  Vec3 e_z{0.0, 0.0, 1.0};
  double chord_offset = 0.0;  // signed distance of the plane along e_perp
  double half_chord = 0.0;    // |a(λ±) - foot point|; sources sit at t = ∓half_chord
  std::pair<double, double> t_range;  // chord between the two sources
  std::pair<double, double> z_range;  // detector coverage at the isocenter
};

PlaneOfInterest plane_of_interest(const ScanGeometry& geom, PlaneDirection direction, double s);
Vec3 world_from_chord(const PlaneOfInterest& p, double t, double z);
std::pair<double, double> chord_from_world(const PlaneOfInterest& p, const Vec3& x);

enum class ArcKind { Short, Complement, Full };
const char* to_string(ArcKind k);
ArcKind parse_arc_kind(std::string_view name);

/// Angular interval [lambda_minus, lambda_plus] traversed with increasing λ;
/// lambda_plus may exceed 2π so that the interval is contiguous.
struct ArcSpec {
  ArcKind kind = ArcKind::Full;
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;

  static ArcSpec full();
  double length() const { return lambda_plus - lambda_minus; }
  /// Length of the overlap between this arc and [a, b] (b - a <= 2π), modulo 2π.
  double overlap(double a, double b) const;
};

/// [λ−, λ+] of the plane; the arc through λ = π/2 (coronal) or π (sagittal) at s = 0.
ArcSpec short_arc(const PlaneOfInterest& p);
/// The rest of the circle, [λ+, λ− + 2π].
ArcSpec complement_arc(const PlaneOfInterest& p);

/// Chord-coordinate sampling of a plane that coincides with a volume's voxel grid.
struct PlaneGrid {
  int nt = 0;
  int nz = 0;
  double t0 = 0.0;
  double dt = 1.0;  // may be negative: t runs opposite to the voxel index
  double z0 = 0.0;
  double dz = 1.0;

  double t(int i) const { return t0 + i * dt; }
  double z(int k) const { return z0 + k * dz; }
  std::size_t size() const { return static_cast<std::size_t>(nt) * nz; }
  bool operator==(const PlaneGrid&) const = default;
};

/// Number of planes a direction needs to cover the grid (ny coronal, nx sagittal).
int plane_count(const GridShape& shape, PlaneDirection direction);
/// World offset of plane `index`: y_j for coronal, x_i for sagittal.
double plane_offset(const GridShape& shape, PlaneDirection direction, int index);
/// Plane sampling aligned with voxel columns: t index = x index (coronal) or
/// y index (sagittal), z index = voxel k.
PlaneGrid plane_grid(const PlaneOfInterest& p, const GridShape& shape);

}  // namespace cbct
