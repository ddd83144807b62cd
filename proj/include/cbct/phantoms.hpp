#pragma once

#include <span>
#include <vector>

#include "cbct/geometry.hpp"
#include "cbct/volume.hpp"

namespace cbct {

/// Stack of coaxial disks along z, alternating solid and gap, centered on z = 0.
struct DiskPhantomSpec {
  double disk_radius = 80.0;  // mm
  double thickness = 16.0;    // mm
  double spacing = 16.0;      // mm gap between adjacent disks
  int n_disks = 7;
  double inside_value = 1.0;
  double outside_value = 0.0;

  /// Columns (a)-(d) of the disk phantom table.
  static DiskPhantomSpec table(char column);
  double stack_height() const { return n_disks * thickness + (n_disks - 1) * spacing; }
  void validate() const;
};

/// Center-sampled voxelization; throws an extent error when the stack is
/// taller than the grid.
Volume3D make_disk_phantom(const DiskPhantomSpec& spec, const GridShape& grid);

struct Primitive {
  enum class Kind { Sphere, Cylinder, Box };
  Kind kind = Kind::Sphere;
  Vec3 center;
  /// Sphere: x = radius. Cylinder (axis along z): x = radius, z = half height.
  /// Box: half extents along each axis.
  Vec3 size;
  double value = 1.0;

  static Primitive sphere(Vec3 center, double radius, double value = 1.0) {
    return {Kind::Sphere, center, {radius, radius, radius}, value};
  }
  static Primitive box(Vec3 center, Vec3 half_extent, double value = 1.0) {
    return {Kind::Box, center, half_extent, value};
  }
  static Primitive cylinder(Vec3 center, double radius, double half_height, double value = 1.0) {
    return {Kind::Cylinder, center, {radius, radius, half_height}, value};
  }
  bool contains(const Vec3& p) const;
};

/// Additive composition: each voxel gets the sum of values of the
/// primitives containing its center.
Volume3D make_primitive_volume(std::span<const Primitive> prims, const GridShape& grid);

/// Exact line integral of spheres and boxes along the full line through
/// `origin` with unit direction `dir`. Cylinders raise an unsupported error.
double analytic_line_integral(std::span<const Primitive> prims, const Vec3& origin, const Vec3& dir);

/// Exact value of detector cell position (u, v) in mm at view angle lambda.
double analytic_projection(std::span<const Primitive> prims, const ScanGeometry& geom, double lambda, double u,
                           double v);

}  // namespace cbct
