#include "cbct/dbp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cbct/error.hpp"
#include "cbct/parallel.hpp"

namespace cbct {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct ViewEntry {
  double c = 1.0, s = 0.0;  // cos λ, sin λ
  double lo = 0.0, hi = 0.0;  // quadrature cell
  int prev = 0, next = 0;
  double inv_span = 0.0;  // 1 / (λ_next − λ_prev)
  int prev2 = -1, next2 = -1;  // outer neighbours for the fourth-order stencil, -1 when absent
};

struct ViewTable {
  std::vector<ViewEntry> views;
  double R = 0.0, D = 0.0;
  double pitch = 1.0;
  int nu = 0, nv = 0;
  double v_limit = 0.0;
};

bool is_full_scan(const std::vector<double>& l) {
  const int n = static_cast<int>(l.size());
  if (n < 3) return false;
  const double step = kTwoPi / n;
  for (int j = 0; j < n; ++j)
    if (std::abs(l[j] - (l[0] + j * step)) > 1e-6 * step) return false;
  return true;
}

ViewTable build_view_table(const ProjectionSet& proj, const ScanGeometry& geom, std::optional<double> row_limit) {
  geom.validate();
  proj.validate();
  require(proj.nu() == geom.nu && proj.nv() == geom.nv, ErrorKind::Config,
          "projection detector size does not match the geometry");
  const auto& l = proj.lambdas();
  const int n = proj.n_views();
  require(n >= 3, ErrorKind::InsufficientViews, "DBP needs at least three views");
  ViewTable t;
  t.R = geom.source_radius;
  t.D = geom.source_detector;
  t.pitch = proj.pitch();
  t.nu = proj.nu();
  t.nv = proj.nv();
  t.v_limit = 0.5 * (t.nv - 1) * t.pitch;
  if (row_limit) t.v_limit = std::min(t.v_limit, *row_limit);
  t.views.resize(static_cast<std::size_t>(n));
  const bool full = is_full_scan(l);
  for (int j = 0; j < n; ++j) {
    ViewEntry& e = t.views[j];
    e.c = std::cos(l[j]);
    e.s = std::sin(l[j]);
    if (full) {
      const double step = kTwoPi / n;
      e.prev = (j + n - 1) % n;
      e.next = (j + 1) % n;
      if (n >= 5) {
        e.prev2 = (j + n - 2) % n;
        e.next2 = (j + 2) % n;
      }
      e.inv_span = 1.0 / (2.0 * step);
      e.lo = l[j] - 0.5 * step;
      e.hi = l[j] + 0.5 * step;
    } else {
      e.prev = std::max(j - 1, 0);
      e.next = std::min(j + 1, n - 1);
      e.inv_span = 1.0 / (l[e.next] - l[e.prev]);
      if (j >= 2 && j + 2 < n && std::abs((l[j + 2] - l[j - 2]) - 2.0 * (l[j + 1] - l[j - 1])) <= 1e-9) {
        e.prev2 = j - 2;
        e.next2 = j + 2;
      }
      e.lo = j == 0 ? l[0] : 0.5 * (l[j - 1] + l[j]);
      e.hi = j == n - 1 ? l[j] : 0.5 * (l[j] + l[j + 1]);
    }
  }
  return t;
}

// Bilinear detector value for the ray with direction (tx, ty, tz) seen by view k.
inline double sample_along(const ProjectionSet& proj, const ViewTable& t, int k, double tx, double ty, double tz) {
  const ViewEntry& e = t.views[k];
  const double den = -(tx * e.c + ty * e.s);
  if (den <= 0.0) return 0.0;
  const double scale = t.D / (den * t.pitch);
  const double fu = (-tx * e.s + ty * e.c) * scale + 0.5 * (t.nu - 1);
  const double fv = tz * scale + 0.5 * (t.nv - 1);
  if (fu <= -1.0 || fv <= -1.0 || fu >= t.nu || fv >= t.nv) return 0.0;
  const int iu = static_cast<int>(std::floor(fu));
  const int iv = static_cast<int>(std::floor(fv));
  const double au = fu - iu, av = fv - iv;
  const auto at = [&](int v, int u) {
    return (u < 0 || v < 0 || u >= t.nu || v >= t.nv) ? 0.0 : proj.at(k, v, u);
  };
  return (1 - av) * ((1 - au) * at(iv, iu) + au * at(iv, iu + 1)) +
         av * ((1 - au) * at(iv + 1, iu) + au * at(iv + 1, iu + 1));
}

// Weighted fixed-direction derivative of view j at point x (weight excluded).
inline double derivative_term(const ProjectionSet& proj, const ViewTable& t, int j, const Vec3& x) {
  const ViewEntry& e = t.views[j];
  const double tx = x.x - t.R * e.c, ty = x.y - t.R * e.s, tz = x.z;
  const double dist = std::sqrt(tx * tx + ty * ty + tz * tz);
  const double d1 = sample_along(proj, t, e.next, tx, ty, tz) - sample_along(proj, t, e.prev, tx, ty, tz);
  if (e.prev2 < 0) return d1 * e.inv_span / dist;
  // Fourth-order central difference on uniformly spaced views.
  const double d2 = sample_along(proj, t, e.next2, tx, ty, tz) - sample_along(proj, t, e.prev2, tx, ty, tz);
  return (8.0 * d1 - d2) * e.inv_span / (6.0 * dist);
}

// Line integral of the ray from view j's source through x.
inline double ray_value(const ProjectionSet& proj, const ViewTable& t, int j, const Vec3& x) {
  const ViewEntry& e = t.views[j];
  return sample_along(proj, t, j, x.x - t.R * e.c, x.y - t.R * e.s, x.z);
}

inline bool point_seen(const ViewTable& t, int j, const Vec3& x) {
  const ViewEntry& e = t.views[j];
  const double tx = x.x - t.R * e.c, ty = x.y - t.R * e.s;
  const double den = -(tx * e.c + ty * e.s);
  if (den <= 0.0) return false;
  const double u = (-tx * e.s + ty * e.c) * t.D / den;
  const double v = x.z * t.D / den;
  return std::abs(u) <= 0.5 * (t.nu - 1) * t.pitch && std::abs(v) <= t.v_limit;
}

std::vector<double> arc_weights(const ViewTable& t, const ArcSpec& arc) {
  std::vector<double> w(t.views.size());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = arc.overlap(t.views[j].lo, t.views[j].hi);
  return w;
}

void require_views(const std::vector<double>& w, const std::string& what) {
  int count = 0;
  for (double v : w) count += v > 0.0;
  require(count >= 3, ErrorKind::InsufficientViews, what + " covers fewer than three views");
}

ArcSpec arc_of(const PlaneOfInterest& p, ArcKind kind) {
  switch (kind) {
    case ArcKind::Short: return short_arc(p);
    case ArcKind::Complement: return complement_arc(p);
    case ArcKind::Full: return ArcSpec::full();
  }
  return ArcSpec::full();
}

}  // namespace

void DbpPlane::validate() const {
  require(g.size() == grid.size(), ErrorKind::Config, "DBP plane sample count does not match its grid");
  for (double v : g) require(std::isfinite(v), ErrorKind::Config, "DBP plane contains non-finite values");
}

DbpPlane compute_dbp(const ProjectionSet& proj, const ScanGeometry& geom, const PlaneOfInterest& plane,
                     const ArcSpec& arc, const PlaneGrid& grid) {
  const ViewTable t = build_view_table(proj, geom, std::nullopt);
  const std::vector<double> w = arc_weights(t, arc);
  require_views(w, std::string("arc '") + to_string(arc.kind) + "'");
  DbpPlane out{plane, arc, grid, std::vector<double>(grid.size(), 0.0)};
  const int n = proj.n_views();
  parallel_for(static_cast<std::size_t>(grid.nz), [&](std::size_t b, std::size_t e) {
    for (std::size_t iz = b; iz < e; ++iz) {
      for (int it = 0; it < grid.nt; ++it) {
        const Vec3 x = world_from_chord(plane, grid.t(it), grid.z(static_cast<int>(iz)));
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
          if (w[j] > 0.0) acc += w[j] * derivative_term(proj, t, j, x);
        out.at(it, static_cast<int>(iz)) = acc;
      }
    }
  });
  return out;
}

Volume3D DbpVolumes::stack(PlaneDirection direction, ArcKind arc) const {
  if (arc == ArcKind::Full) return full;
  const Volume3D& s = direction == PlaneDirection::Coronal ? coronal_short : sagittal_short;
  if (arc == ArcKind::Short) return s;
  Volume3D c(full.shape());
  for (std::size_t i = 0; i < c.values().size(); ++i) c.values()[i] = full.values()[i] - s.values()[i];
  return c;
}

DbpVolumes compute_dbp_volumes(const ProjectionSet& proj, const ScanGeometry& geom, const GridShape& grid,
                               std::optional<double> row_limit, double support_threshold) {
  grid.validate();
  const ViewTable t = build_view_table(proj, geom, row_limit);
  const int n = proj.n_views();
  std::vector<double> wfull(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) wfull[j] = t.views[j].hi - t.views[j].lo;

  // Short-arc weights per coronal plane (indexed by y) and sagittal plane (by x).
  std::vector<std::vector<double>> wcor(grid.ny), wsag(grid.nx);
  for (int j = 0; j < grid.ny; ++j) {
    const PlaneOfInterest p = plane_of_interest(geom, PlaneDirection::Coronal, grid.y(j));
    wcor[j] = arc_weights(t, short_arc(p));
    require_views(wcor[j], "short arc of coronal plane " + std::to_string(j));
    require_views(arc_weights(t, complement_arc(p)), "complement arc of coronal plane " + std::to_string(j));
  }
  for (int i = 0; i < grid.nx; ++i) {
    const PlaneOfInterest p = plane_of_interest(geom, PlaneDirection::Sagittal, grid.x(i));
    wsag[i] = arc_weights(t, short_arc(p));
    require_views(wsag[i], "short arc of sagittal plane " + std::to_string(i));
    require_views(arc_weights(t, complement_arc(p)), "complement arc of sagittal plane " + std::to_string(i));
  }

  double peak = 0.0;
  for (double v : proj.values()) peak = std::max(peak, std::abs(v));
  const double floor_value = support_threshold * peak;

  DbpVolumes out{Volume3D(grid), Volume3D(grid), Volume3D(grid), Volume3D(grid), Volume3D(grid)};
  parallel_for(static_cast<std::size_t>(grid.ny) * grid.nz, [&](std::size_t b, std::size_t e) {
    for (std::size_t row = b; row < e; ++row) {
      const int j = static_cast<int>(row % grid.ny);
      const int k = static_cast<int>(row / grid.ny);
      const std::vector<double>& wc = wcor[j];
      for (int i = 0; i < grid.nx; ++i) {
        const Vec3 x = grid.voxel_center(i, j, k);
        const std::vector<double>& ws = wsag[i];
        double full = 0.0, cor = 0.0, sag = 0.0;
        bool seen = true;
        double lowest = std::numeric_limits<double>::infinity();
        for (int v = 0; v < n; ++v) {
          const double d = derivative_term(proj, t, v, x);
          full += wfull[v] * d;
          cor += wc[v] * d;
          sag += ws[v] * d;
          const bool in_view = point_seen(t, v, x);
          seen = seen && in_view;
          if (in_view) lowest = std::min(lowest, ray_value(proj, t, v, x));
        }
        const std::size_t idx = out.full.index(i, j, k);
        out.full.values()[idx] = full;
        out.coronal_short.values()[idx] = cor;
        out.sagittal_short.values()[idx] = sag;
        out.valid.values()[idx] = seen ? 1.0 : 0.0;
        out.support.values()[idx] = lowest > floor_value ? 1.0 : 0.0;
      }
    }
  });
  return out;
}

DbpPlane plane_from_stack(const Volume3D& stack, const ScanGeometry& geom, PlaneDirection direction, ArcKind arc,
                          int index) {
  const GridShape& sh = stack.shape();
  require(index >= 0 && index < plane_count(sh, direction), ErrorKind::Bounds, "plane index out of range");
  const PlaneOfInterest p = plane_of_interest(geom, direction, plane_offset(sh, direction, index));
  DbpPlane out{p, arc_of(p, arc), plane_grid(p, sh), {}};
  out.g.resize(out.grid.size());
  for (int k = 0; k < sh.nz; ++k)
    for (int it = 0; it < out.grid.nt; ++it)
      out.at(it, k) = direction == PlaneDirection::Coronal ? stack(it, index, k) : stack(index, it, k);
  return out;
}

SpectralSignature spectral_signature(const ScanGeometry& geom, const Vec3& x, PlaneDirection direction) {
  const PlaneOfInterest p = plane_of_interest(geom, direction, direction == PlaneDirection::Coronal ? x.y : x.x);
  SpectralSignature sig;
  sig.x = x;
  sig.lambda_minus = p.lambda_minus;
  sig.lambda_plus = p.lambda_plus;
  sig.d_minus = normalized(x - source_position(geom, p.lambda_minus));
  sig.d_plus = normalized(x - source_position(geom, p.lambda_plus));
  return sig;
}

std::optional<std::complex<double>> sigma(const SpectralSignature& sig, const Vec3& omega) {
  if (omega.x == 0.0 && omega.y == 0.0 && omega.z == 0.0) return std::nullopt;
  const auto sgn = [](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); };
  const double diff = sgn(dot(omega, sig.d_minus)) - sgn(dot(omega, sig.d_plus));
  return std::complex<double>(0.0, std::numbers::pi * diff);
}

double fft_frequency(int k, int n) {
  const int f = k <= (n - 1) / 2 ? k : k - n;
  return static_cast<double>(f) / n;
}

std::vector<std::uint8_t> missing_frequency_mask(const ScanGeometry& geom, const Vec3& x, PlaneDirection direction,
                                                 int rows, int cols, double omega_z) {
  require(rows >= 1 && cols >= 1, ErrorKind::Config, "frequency grid must be non-empty");
  const SpectralSignature sig = spectral_signature(geom, x, direction);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const auto s = sigma(sig, {fft_frequency(c, cols), fft_frequency(r, rows), omega_z});
      mask[static_cast<std::size_t>(r) * cols + c] = !s || s->imag() == 0.0;
    }
  return mask;
}

}  // namespace cbct
