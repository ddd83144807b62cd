#include "cbct/phantoms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cbct/error.hpp"
#include "cbct/parallel.hpp"

namespace cbct {

DiskPhantomSpec DiskPhantomSpec::table(char column) {
  DiskPhantomSpec s;
  switch (column) {
    case 'a': s.thickness = 10; s.spacing = 10; s.n_disks = 9; break;
    case 'b': s.thickness = 14; s.spacing = 14; s.n_disks = 7; break;
    case 'c': s.thickness = 20; s.spacing = 20; s.n_disks = 5; break;
    case 'd': s.thickness = 16; s.spacing = 16; s.n_disks = 7; break;
    default: fail(ErrorKind::Config, std::string("unknown disk phantom column '") + column + "'");
  }
  return s;
}

void DiskPhantomSpec::validate() const {
  require(disk_radius > 0 && thickness > 0, ErrorKind::Config, "disk radius and thickness must be positive");
  require(spacing >= 0, ErrorKind::Config, "disk spacing must be non-negative");
  require(n_disks >= 1, ErrorKind::Config, "need at least one disk");
}

Volume3D make_disk_phantom(const DiskPhantomSpec& spec, const GridShape& grid) {
  spec.validate();
  Volume3D vol(grid, spec.outside_value);
  const double height = spec.stack_height();
  const double grid_depth = grid.nz * grid.spacing.z;
  require(height <= grid_depth + 1e-9, ErrorKind::Bounds,
          "disk stack (" + std::to_string(height) + " mm) taller than grid (" + std::to_string(grid_depth) + " mm)");
  const double pitch = spec.thickness + spec.spacing;
  const double r2 = spec.disk_radius * spec.disk_radius;
  for (int k = 0; k < grid.nz; ++k) {
    const double z = grid.z(k);
    // Position within the stack measured from its bottom face.
    const double rel = z + 0.5 * height;
    if (rel < 0 || rel > height) continue;
    const double phase = rel - std::floor(rel / pitch) * pitch;
    const int disk = static_cast<int>(std::floor(rel / pitch));
    const bool solid = disk < spec.n_disks && (phase < spec.thickness || (phase == spec.thickness && rel == height));
    if (!solid) continue;
    for (int j = 0; j < grid.ny; ++j) {
      const double y = grid.y(j);
      for (int i = 0; i < grid.nx; ++i) {
        const double x = grid.x(i);
        if (x * x + y * y <= r2) vol(i, j, k) = spec.inside_value;
      }
    }
  }
  return vol;
}

bool Primitive::contains(const Vec3& p) const {
  const Vec3 d = p - center;
  switch (kind) {
    case Kind::Sphere: return dot(d, d) <= size.x * size.x;
    case Kind::Cylinder: return d.x * d.x + d.y * d.y <= size.x * size.x && std::abs(d.z) <= size.z;
    case Kind::Box: return std::abs(d.x) <= size.x && std::abs(d.y) <= size.y && std::abs(d.z) <= size.z;
  }
  return false;
}

Volume3D make_primitive_volume(std::span<const Primitive> prims, const GridShape& grid) {
  for (const auto& p : prims)
    require(p.size.x > 0 && p.size.y > 0 && p.size.z > 0, ErrorKind::Config, "primitive sizes must be positive");
  Volume3D vol(grid, 0.0);
  parallel_for(static_cast<std::size_t>(grid.nz), [&](std::size_t kb, std::size_t ke) {
    for (auto k = static_cast<int>(kb); k < static_cast<int>(ke); ++k)
      for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
          const Vec3 c = grid.voxel_center(i, j, k);
          double v = 0.0;
          for (const auto& p : prims)
            if (p.contains(c)) v += p.value;
          vol(i, j, k) = v;
        }
  });
  return vol;
}

namespace {

double sphere_chord(const Primitive& p, const Vec3& origin, const Vec3& dir) {
  const Vec3 oc = p.center - origin;
  const double along = dot(oc, dir);
  const double d2 = dot(oc, oc) - along * along;
  const double r2 = p.size.x * p.size.x;
  return d2 >= r2 ? 0.0 : 2.0 * std::sqrt(r2 - d2);
}

double box_chord(const Primitive& p, const Vec3& origin, const Vec3& dir) {
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  const double o[3] = {origin.x - p.center.x, origin.y - p.center.y, origin.z - p.center.z};
  const double d[3] = {dir.x, dir.y, dir.z};
  const double h[3] = {p.size.x, p.size.y, p.size.z};
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (std::abs(o[a]) > h[a]) return 0.0;
      continue;
    }
    double lo = (-h[a] - o[a]) / d[a];
    double hi = (h[a] - o[a]) / d[a];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
  }
  return std::max(0.0, t1 - t0);
}

}  // namespace

double analytic_line_integral(std::span<const Primitive> prims, const Vec3& origin, const Vec3& dir) {
  double total = 0.0;
  for (const auto& p : prims) {
    switch (p.kind) {
      case Primitive::Kind::Sphere: total += p.value * sphere_chord(p, origin, dir); break;
      case Primitive::Kind::Box: total += p.value * box_chord(p, origin, dir); break;
      case Primitive::Kind::Cylinder: fail(ErrorKind::Unsupported, "no closed-form projection for cylinders");
    }
  }
  return total;
}

double analytic_projection(std::span<const Primitive> prims, const ScanGeometry& geom, double lambda, double u,
                           double v) {
  const ViewFrame f = view_frame(geom, lambda);
  const Vec3 cell = f.source + geom.source_detector * f.central + u * f.u_axis + Vec3{0.0, 0.0, v};
  return analytic_line_integral(prims, f.source, normalized(cell - f.source));
}

}  // namespace cbct
