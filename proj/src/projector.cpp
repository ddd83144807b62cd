#include "cbct/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "cbct/error.hpp"
#include "cbct/parallel.hpp"

namespace cbct {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Visits midpoint samples of the line inside the trilinear support box
// [-1, n] (voxel units) of every axis. `fn(qx, qy, qz, h)` receives
// continuous voxel coordinates and the step length in mm.
template <class Fn>
void march(const GridShape& g, const Vec3& source, const Vec3& dir, Fn&& fn) {
  const double o[3] = {(source.x - g.origin.x) / g.spacing.x, (source.y - g.origin.y) / g.spacing.y,
                       (source.z - g.origin.z) / g.spacing.z};
  const double d[3] = {dir.x / g.spacing.x, dir.y / g.spacing.y, dir.z / g.spacing.z};
  const int n[3] = {g.nx, g.ny, g.nz};
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] <= -1.0 || o[a] >= n[a]) return;
      continue;
    }
    double lo = (-1.0 - o[a]) / d[a];
    double hi = (n[a] - o[a]) / d[a];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
  }
  if (!(t1 > t0)) return;
  const double max_step = 0.5 * std::min({g.spacing.x, g.spacing.y, g.spacing.z});
  const double len = t1 - t0;
  const auto steps = static_cast<long>(std::ceil(len / max_step));
  const double h = len / static_cast<double>(steps);
  const double start = t0 + 0.5 * h;
  for (long s = 0; s < steps; ++s) {
    const double t = start + s * h;
    fn(o[0] + t * d[0], o[1] + t * d[1], o[2] + t * d[2], h);
  }
}

struct Trilinear {
  int ix, iy, iz;
  double fx, fy, fz;
  explicit Trilinear(double qx, double qy, double qz) {
    const double flx = std::floor(qx), fly = std::floor(qy), flz = std::floor(qz);
    ix = static_cast<int>(flx);
    iy = static_cast<int>(fly);
    iz = static_cast<int>(flz);
    fx = qx - flx;
    fy = qy - fly;
    fz = qz - flz;
  }
};

double sample(const Volume3D& vol, double qx, double qy, double qz) {
  const Trilinear s(qx, qy, qz);
  const int nx = vol.nx(), ny = vol.ny(), nz = vol.nz();
  const double* v = vol.data().data();
  const std::size_t sy = static_cast<std::size_t>(nx);
  const std::size_t sz = sy * ny;
  if (s.ix >= 0 && s.iy >= 0 && s.iz >= 0 && s.ix + 1 < nx && s.iy + 1 < ny && s.iz + 1 < nz) {
    const double* p = v + s.iz * sz + s.iy * sy + s.ix;
    const double c00 = p[0] + s.fx * (p[1] - p[0]);
    const double c10 = p[sy] + s.fx * (p[sy + 1] - p[sy]);
    const double c01 = p[sz] + s.fx * (p[sz + 1] - p[sz]);
    const double c11 = p[sz + sy] + s.fx * (p[sz + sy + 1] - p[sz + sy]);
    const double c0 = c00 + s.fy * (c10 - c00);
    const double c1 = c01 + s.fy * (c11 - c01);
    return c0 + s.fz * (c1 - c0);
  }
  double acc = 0.0;
  for (int dz = 0; dz < 2; ++dz) {
    const int k = s.iz + dz;
    if (k < 0 || k >= nz) continue;
    const double wz = dz ? s.fz : 1.0 - s.fz;
    for (int dy = 0; dy < 2; ++dy) {
      const int j = s.iy + dy;
      if (j < 0 || j >= ny) continue;
      const double wy = dy ? s.fy : 1.0 - s.fy;
      for (int dx = 0; dx < 2; ++dx) {
        const int i = s.ix + dx;
        if (i < 0 || i >= nx) continue;
        const double wx = dx ? s.fx : 1.0 - s.fx;
        acc += wx * wy * wz * v[k * sz + j * sy + i];
      }
    }
  }
  return acc;
}

void scatter(std::vector<double>& out, const GridShape& g, double qx, double qy, double qz, double value) {
  const Trilinear s(qx, qy, qz);
  const std::size_t sy = static_cast<std::size_t>(g.nx);
  const std::size_t sz = sy * g.ny;
  for (int dz = 0; dz < 2; ++dz) {
    const int k = s.iz + dz;
    if (k < 0 || k >= g.nz) continue;
    const double wz = dz ? s.fz : 1.0 - s.fz;
    for (int dy = 0; dy < 2; ++dy) {
      const int j = s.iy + dy;
      if (j < 0 || j >= g.ny) continue;
      const double wy = dy ? s.fy : 1.0 - s.fy;
      for (int dx = 0; dx < 2; ++dx) {
        const int i = s.ix + dx;
        if (i < 0 || i >= g.nx) continue;
        const double wx = dx ? s.fx : 1.0 - s.fx;
        out[k * sz + j * sy + i] += wx * wy * wz * value;
      }
    }
  }
}

Vec3 cell_direction(const ScanGeometry& geom, const ViewFrame& f, double u, double v) {
  return normalized(geom.source_detector * f.central + u * f.u_axis + Vec3{0.0, 0.0, v});
}

double cell_u(const ProjectionSet& p, int iu) { return (iu - 0.5 * (p.nu() - 1)) * p.pitch(); }
double cell_v(const ProjectionSet& p, int iv) { return (iv - 0.5 * (p.nv() - 1)) * p.pitch(); }

void check_geometry(const ScanGeometry& geom) {
  require(geom.source_radius > 0, ErrorKind::Config, "degenerate geometry: source radius must be positive");
  geom.validate();
}

// Fixed number of partial accumulators for the scatter-based adjoint so the
// summation order never depends on the worker count.
constexpr int kAdjointBlocks = 8;

}  // namespace

std::vector<double> arc_lambdas(const ArcSpec& arc, int n_views) {
  require(n_views >= 1, ErrorKind::Config, "need at least one view");
  std::vector<double> l(static_cast<std::size_t>(n_views));
  if (arc.kind == ArcKind::Full || arc.length() >= kTwoPi) {
    for (int j = 0; j < n_views; ++j) l[j] = kTwoPi * j / n_views;
    return l;
  }
  require(arc.length() > 0, ErrorKind::Config, "arc must have positive length");
  const double start = wrap_angle(arc.lambda_minus);
  if (n_views == 1) {
    l[0] = start;
    return l;
  }
  const double step = arc.length() / (n_views - 1);
  for (int j = 0; j < n_views; ++j) l[j] = start + j * step;
  return l;
}

double project_ray(const Volume3D& vol, const Vec3& source, const Vec3& dir) {
  double acc = 0.0;
  march(vol.shape(), source, dir, [&](double qx, double qy, double qz, double h) { acc += h * sample(vol, qx, qy, qz); });
  return acc;
}

void forward_project_into(const Volume3D& vol, const ScanGeometry& geom, ProjectionSet& out) {
  check_geometry(geom);
  const int nv = out.nv();
  const int nu = out.nu();
  const auto& lambdas = out.lambdas();
  parallel_for(static_cast<std::size_t>(out.n_views()) * nv, [&](std::size_t b, std::size_t e) {
    for (std::size_t row = b; row < e; ++row) {
      const int view = static_cast<int>(row / nv);
      const int iv = static_cast<int>(row % nv);
      const ViewFrame f = view_frame(geom, lambdas[view]);
      for (int iu = 0; iu < nu; ++iu)
        out.at(view, iv, iu) = project_ray(vol, f.source, cell_direction(geom, f, cell_u(out, iu), cell_v(out, iv)));
    }
  });
}

ProjectionSet forward_project(const Volume3D& vol, const ScanGeometry& geom, std::span<const double> lambdas) {
  check_geometry(geom);
  ProjectionSet out(geom.nu, geom.nv, geom.pitch, {lambdas.begin(), lambdas.end()});
  forward_project_into(vol, geom, out);
  return out;
}

ProjectionSet forward_project(const Volume3D& vol, const ScanGeometry& geom, const ArcSpec& arc) {
  check_geometry(geom);
  const auto lambdas = arc_lambdas(arc, geom.n_views);
  return forward_project(vol, geom, lambdas);
}

namespace {

Volume3D adjoint_project(const ProjectionSet& proj, const ScanGeometry& geom, const GridShape& grid) {
  const int n_views = proj.n_views();
  const int blocks = std::min(kAdjointBlocks, n_views);
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(blocks));
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t b, std::size_t e) {
    for (std::size_t blk = b; blk < e; ++blk) {
      auto& acc = partial[blk];
      acc.assign(grid.voxel_count(), 0.0);
      const int v0 = static_cast<int>(blk * n_views / blocks);
      const int v1 = static_cast<int>((blk + 1) * n_views / blocks);
      for (int view = v0; view < v1; ++view) {
        const ViewFrame f = view_frame(geom, proj.lambdas()[view]);
        for (int iv = 0; iv < proj.nv(); ++iv)
          for (int iu = 0; iu < proj.nu(); ++iu) {
            const double y = proj.at(view, iv, iu);
            if (y == 0.0) continue;
            march(grid, f.source, cell_direction(geom, f, cell_u(proj, iu), cell_v(proj, iv)),
                  [&](double qx, double qy, double qz, double h) { scatter(acc, grid, qx, qy, qz, h * y); });
          }
      }
    }
  });
  Volume3D out(grid, 0.0);
  auto& dst = out.values();
  for (const auto& acc : partial)
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += acc[i];
  return out;
}

double bilinear(std::span<const double> view, int nu, int nv, double fu, double fv) {
  const double flu = std::floor(fu), flv = std::floor(fv);
  const int iu = static_cast<int>(flu), iv = static_cast<int>(flv);
  const double au = fu - flu, av = fv - flv;
  double acc = 0.0;
  for (int dv = 0; dv < 2; ++dv) {
    const int r = iv + dv;
    if (r < 0 || r >= nv) continue;
    const double wv = dv ? av : 1.0 - av;
    for (int du = 0; du < 2; ++du) {
      const int c = iu + du;
      if (c < 0 || c >= nu) continue;
      acc += wv * (du ? au : 1.0 - au) * view[static_cast<std::size_t>(r) * nu + c];
    }
  }
  return acc;
}

Volume3D fdk_weighted_backproject(const ProjectionSet& proj, const ScanGeometry& geom, const GridShape& grid) {
  Volume3D out(grid, 0.0);
  const double R = geom.source_radius;
  const double D = geom.source_detector;
  const double inv_pitch = 1.0 / proj.pitch();
  const double cu = 0.5 * (proj.nu() - 1);
  const double cv = 0.5 * (proj.nv() - 1);
  const int n_views = proj.n_views();
  std::vector<double> cs(n_views), sn(n_views);
  for (int j = 0; j < n_views; ++j) {
    cs[j] = std::cos(proj.lambdas()[j]);
    sn[j] = std::sin(proj.lambdas()[j]);
  }
  parallel_for(static_cast<std::size_t>(grid.nz) * grid.ny, [&](std::size_t b, std::size_t e) {
    std::vector<double> row(static_cast<std::size_t>(grid.nx));
    for (std::size_t line = b; line < e; ++line) {
      const int k = static_cast<int>(line / grid.ny);
      const int j = static_cast<int>(line % grid.ny);
      const double y = grid.y(j);
      const double z = grid.z(k);
      std::fill(row.begin(), row.end(), 0.0);
      for (int view = 0; view < n_views; ++view) {
        const auto data = proj.view(view);
        for (int i = 0; i < grid.nx; ++i) {
          const double x = grid.x(i);
          const double U = R - (x * cs[view] + y * sn[view]);
          const double mag = D / U;
          const double u = mag * (-x * sn[view] + y * cs[view]);
          const double v = mag * z;
          const double w = (R / U) * (R / U);
          row[i] += w * bilinear(data, proj.nu(), proj.nv(), u * inv_pitch + cu, v * inv_pitch + cv);
        }
      }
      for (int i = 0; i < grid.nx; ++i) out(i, j, k) = row[i];
    }
  });
  return out;
}

}  // namespace

Volume3D back_project(const ProjectionSet& proj, const ScanGeometry& geom, const GridShape& grid,
                      BackprojectionWeights weights) {
  check_geometry(geom);
  grid.validate();
  require(proj.values().size() == proj.view_size() * proj.lambdas().size(), ErrorKind::Config,
          "projection data does not match its layout");
  require(proj.nu() == geom.nu && proj.nv() == geom.nv && proj.pitch() == geom.pitch, ErrorKind::Config,
          "projection detector layout does not match the geometry");
  return weights == BackprojectionWeights::None ? adjoint_project(proj, geom, grid)
                                                : fdk_weighted_backproject(proj, geom, grid);
}

void NoiseSpec::validate() const {
  require(i0 > 0 && std::isfinite(i0), ErrorKind::Config, "I0 must be positive");
  require(realizations >= 1, ErrorKind::Config, "need at least one noise realization");
}

ProjectionSet add_poisson_noise(const ProjectionSet& proj, const NoiseSpec& noise, int realization) {
  noise.validate();
  ProjectionSet out = proj;
  const auto seed_lo = static_cast<std::uint32_t>(noise.seed & 0xffffffffu);
  const auto seed_hi = static_cast<std::uint32_t>(noise.seed >> 32);
  parallel_for(static_cast<std::size_t>(proj.n_views()), [&](std::size_t b, std::size_t e) {
    for (std::size_t view = b; view < e; ++view) {
      std::seed_seq seq{seed_lo, seed_hi, static_cast<std::uint32_t>(realization), static_cast<std::uint32_t>(view)};
      std::mt19937_64 rng(seq);
      auto in = proj.view(static_cast<int>(view));
      auto dst = out.view(static_cast<int>(view));
      for (std::size_t c = 0; c < in.size(); ++c) {
        const double mean = noise.i0 * std::exp(-in[c]);
        std::poisson_distribution<long long> dist(mean);
        const double counts = mean > 0 ? static_cast<double>(dist(rng)) : 0.0;
        dst[c] = -std::log(std::max(counts, 1.0) / noise.i0);
      }
    }
  });
  return out;
}

double measure_snr(const ProjectionSet& clean, const ProjectionSet& noisy) {
  require(clean.values().size() == noisy.values().size() && clean.nu() == noisy.nu() && clean.nv() == noisy.nv(),
          ErrorKind::Config, "projection sets differ in shape");
  double signal = 0.0, err = 0.0;
  for (std::size_t i = 0; i < clean.values().size(); ++i) {
    const double c = clean.values()[i];
    const double d = c - noisy.values()[i];
    signal += c * c;
    err += d * d;
  }
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(signal / err);
}

void mask_detector_rows(ProjectionSet& proj, const ScanGeometry& geom, double half_angle) {
  require(half_angle > 0, ErrorKind::Config, "cone angle must be positive");
  require(half_angle <= geom.half_cone_angle() + 1e-12, ErrorKind::Config,
          "requested cone angle exceeds the detector's");
  const double vmax = geom.source_detector * std::tan(half_angle);
  for (int view = 0; view < proj.n_views(); ++view)
    for (int iv = 0; iv < proj.nv(); ++iv) {
      if (std::abs(cell_v(proj, iv)) <= vmax + 1e-9) continue;
      for (int iu = 0; iu < proj.nu(); ++iu) proj.at(view, iv, iu) = 0.0;
    }
}

}  // namespace cbct
