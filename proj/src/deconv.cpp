#include "cbct/deconv.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>

#include "cbct/error.hpp"
#include "cbct/hilbert.hpp"
#include "cbct/io.hpp"
#include "cbct/parallel.hpp"
#include "cbct/tv.hpp"

namespace cbct {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using Map = Eigen::Map<RowMatrix>;

// Orientation of the short-arc model relative to the Hilbert transform along e.
constexpr double kShortSign = -1.0;

struct Tap {
  int idx = -1;     // lower sample, may be out of range
  double w = 0.0;   // weight of idx + 1
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace

// One family of lines through the source point at chord position `source_t`.
// Line κ holds the points with z = κ |t - source_t|.
struct PlaneSystem::Fan {
  int nk = 0;
  int nt = 0;
  int nz = 0;
  std::vector<Tap> to_fan;    // [m * nt + j]: height of line m in column j, in z-sample units
  std::vector<Tap> from_fan;  // [k * nt + i]: line through (t_i, z_k), in κ-sample units

  Fan(const PlaneGrid& g, double source_t) : nt(g.nt), nz(g.nz) {
    std::vector<double> lever(static_cast<std::size_t>(nt));
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i = 0; i < nt; ++i) {
      lever[i] = std::abs(g.t(i) - source_t);
      require(lever[i] > 0.0, ErrorKind::Geometry, "plane grid reaches the trajectory");
      lo = std::min(lo, lever[i]);
      hi = std::max(hi, lever[i]);
    }
    const double zmin = std::min(g.z(0), g.z(nz - 1)), zmax = std::max(g.z(0), g.z(nz - 1));
    const double kmin = std::min(zmin / lo, zmin / hi), kmax = std::max(zmax / lo, zmax / hi);
    const double dk = std::abs(g.dz) / hi;
    nk = static_cast<int>(std::ceil((kmax - kmin) / dk)) + 1;
    const auto tap = [](double frac) {
      const double f = std::floor(frac);
      return Tap{static_cast<int>(f), frac - f};
    };
    to_fan.resize(static_cast<std::size_t>(nk) * nt);
    for (int m = 0; m < nk; ++m)
      for (int j = 0; j < nt; ++j) to_fan[static_cast<std::size_t>(m) * nt + j] = tap(((kmin + m * dk) * lever[j] - g.z0) / g.dz);
    from_fan.resize(g.size());
    for (int k = 0; k < nz; ++k)
      for (int i = 0; i < nt; ++i) from_fan[static_cast<std::size_t>(k) * nt + i] = tap((g.z(k) / lever[i] - kmin) / dk);
  }

  // f (nz x nt) -> F (nk x nt)
  void gather_fan(const double* f, double* F) const {
    for (int m = 0; m < nk; ++m)
      for (int j = 0; j < nt; ++j) {
        const Tap& t = to_fan[static_cast<std::size_t>(m) * nt + j];
        double v = 0.0;
        if (t.idx >= 0 && t.idx < nz) v += (1.0 - t.w) * f[static_cast<std::size_t>(t.idx) * nt + j];
        if (t.idx + 1 >= 0 && t.idx + 1 < nz) v += t.w * f[static_cast<std::size_t>(t.idx + 1) * nt + j];
        F[static_cast<std::size_t>(m) * nt + j] = v;
      }
  }
  void scatter_fan(const double* F, double* f) const {
    for (int m = 0; m < nk; ++m)
      for (int j = 0; j < nt; ++j) {
        const Tap& t = to_fan[static_cast<std::size_t>(m) * nt + j];
        const double v = F[static_cast<std::size_t>(m) * nt + j];
        if (t.idx >= 0 && t.idx < nz) f[static_cast<std::size_t>(t.idx) * nt + j] += (1.0 - t.w) * v;
        if (t.idx + 1 >= 0 && t.idx + 1 < nz) f[static_cast<std::size_t>(t.idx + 1) * nt + j] += t.w * v;
      }
  }
  // G (nk x nt) -> g (nz x nt), accumulated
  void gather_plane(const double* G, double* g) const {
    for (int k = 0; k < nz; ++k)
      for (int i = 0; i < nt; ++i) {
        const Tap& t = from_fan[static_cast<std::size_t>(k) * nt + i];
        double v = 0.0;
        if (t.idx >= 0 && t.idx < nk) v += (1.0 - t.w) * G[static_cast<std::size_t>(t.idx) * nt + i];
        if (t.idx + 1 >= 0 && t.idx + 1 < nk) v += t.w * G[static_cast<std::size_t>(t.idx + 1) * nt + i];
        g[static_cast<std::size_t>(k) * nt + i] += v;
      }
  }
  void scatter_plane(const double* g, double* G) const {
    for (int k = 0; k < nz; ++k)
      for (int i = 0; i < nt; ++i) {
        const Tap& t = from_fan[static_cast<std::size_t>(k) * nt + i];
        const double v = g[static_cast<std::size_t>(k) * nt + i];
        if (t.idx >= 0 && t.idx < nk) G[static_cast<std::size_t>(t.idx) * nt + i] += (1.0 - t.w) * v;
        if (t.idx + 1 >= 0 && t.idx + 1 < nk) G[static_cast<std::size_t>(t.idx + 1) * nt + i] += t.w * v;
      }
  }
};

PlaneSystem::PlaneSystem(const PlaneOfInterest& plane, std::vector<ArcSpec> arcs, const PlaneGrid& grid)
    : plane_(plane), arcs_(std::move(arcs)), grid_(grid) {
  require(!arcs_.empty() && arcs_.size() <= 2, ErrorKind::Config, "a plane system takes one or two arcs");
  require(grid_.nt >= 2 && grid_.nz >= 2, ErrorKind::Config, "plane grid needs at least 2 x 2 samples");
  require(plane_.half_chord > 0.0, ErrorKind::Geometry, "plane is tangent to the trajectory");
  for (const ArcSpec& a : arcs_) {
    require(a.kind != ArcKind::Full, ErrorKind::Config, "a full-circle arc carries no plane information");
    signs_.push_back(a.kind == ArcKind::Short ? 1.0 : -1.0);
  }
  fans_[0] = std::make_shared<const Fan>(grid_, -plane_.half_chord);
  fans_[1] = std::make_shared<const Fan>(grid_, plane_.half_chord);
  const int nt = grid_.nt;
  const std::vector<double> taps = hilbert_taps(nt);
  const double scale = kShortSign * std::numbers::pi * (grid_.dt > 0 ? 1.0 : -1.0);
  auto T = std::make_shared<std::vector<double>>(static_cast<std::size_t>(nt) * nt);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < nt; ++j) (*T)[static_cast<std::size_t>(i) * nt + j] = scale * taps[i - j + nt];
  toeplitz_ = T;
}

void PlaneSystem::set_row_weights(std::vector<double> w) {
  require(w.empty() || w.size() == grid_.size(), ErrorKind::Config, "row weight count does not match the plane grid");
  row_weights_ = std::move(w);
}

void PlaneSystem::set_support(std::vector<double> s) {
  require(s.empty() || s.size() == grid_.size(), ErrorKind::Config, "support size does not match the plane grid");
  support_ = std::move(s);
}

std::vector<double> PlaneSystem::core(const std::vector<double>& f_in) const {
  require(f_in.size() == cols(), ErrorKind::Config, "plane image size does not match the system");
  const int nt = grid_.nt;
  const ConstMap T(toeplitz_->data(), nt, nt);
  std::vector<double> f = f_in;
  if (!support_.empty())
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= support_[i];
  std::vector<double> g(grid_.size(), 0.0);
  for (const auto& fan : fans_) {
    RowMatrix F(fan->nk, nt);
    fan->gather_fan(f.data(), F.data());
    const RowMatrix G = F * T.transpose();
    fan->gather_plane(G.data(), g.data());
  }
  return g;
}

std::vector<double> PlaneSystem::core_adjoint(const std::vector<double>& g) const {
  require(g.size() == grid_.size(), ErrorKind::Config, "plane data size does not match the system");
  const int nt = grid_.nt;
  const ConstMap T(toeplitz_->data(), nt, nt);
  std::vector<double> f(grid_.size(), 0.0);
  for (const auto& fan : fans_) {
    RowMatrix G = RowMatrix::Zero(fan->nk, nt);
    fan->scatter_plane(g.data(), G.data());
    const RowMatrix F = G * T;
    fan->scatter_fan(F.data(), f.data());
  }
  if (!support_.empty())
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= support_[i];
  return f;
}

std::vector<double> PlaneSystem::apply(const std::vector<double>& f) const {
  const std::vector<double> c = core(f);
  const std::size_t n = grid_.size();
  std::vector<double> out(rows());
  for (std::size_t a = 0; a < arcs_.size(); ++a)
    for (std::size_t i = 0; i < n; ++i)
      out[a * n + i] = signs_[a] * (row_weights_.empty() ? 1.0 : row_weights_[i]) * c[i];
  return out;
}

std::vector<double> PlaneSystem::apply_adjoint(const std::vector<double>& g) const {
  require(g.size() == rows(), ErrorKind::Config, "stacked plane data size does not match the system");
  const std::size_t n = grid_.size();
  std::vector<double> h(n, 0.0);
  for (std::size_t a = 0; a < arcs_.size(); ++a)
    for (std::size_t i = 0; i < n; ++i)
      h[i] += signs_[a] * (row_weights_.empty() ? 1.0 : row_weights_[i]) * g[a * n + i];
  return core_adjoint(h);
}

std::vector<double> PlaneSystem::normal(const std::vector<double>& f) const {
  std::vector<double> c = core(f);
  const double narcs = static_cast<double>(arcs_.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double w = row_weights_.empty() ? 1.0 : row_weights_[i];
    c[i] *= narcs * w * w;
  }
  return core_adjoint(c);
}

double PlaneSystem::normal_norm(int iterations) const {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> U(0.5, 1.5);
  std::vector<double> v(cols());
  for (double& x : v) x = U(rng);
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double n = norm2(v);
    if (n == 0.0) return 0.0;
    for (double& x : v) x /= n;
    std::vector<double> w = normal(v);
    lambda = dot(v, w);
    v = std::move(w);
  }
  return lambda;
}

PlaneSystem build_plane_system(const ScanGeometry& geom, const PlaneOfInterest& plane, std::vector<ArcSpec> arcs,
                               const PlaneGrid& grid) {
  geom.validate();
  require(std::abs(plane.s) < geom.source_radius && plane.half_chord > 1e-9 * geom.source_radius, ErrorKind::Geometry,
          "plane is tangent to the trajectory");
  return PlaneSystem(plane, std::move(arcs), grid);
}

Regularizer parse_regularizer(std::string_view name) {
  if (name == "tikhonov") return Regularizer::Tikhonov;
  if (name == "tv") return Regularizer::Tv;
  fail(ErrorKind::Config, "unknown regularizer '" + std::string(name) + "'");
}

const char* to_string(Regularizer r) { return r == Regularizer::Tikhonov ? "tikhonov" : "tv"; }

void DeconvConfig::validate() const {
  require(reg_weight > 0, ErrorKind::Config, "reg_weight must be positive");
  require(max_iter >= 1, ErrorKind::Config, "max_iter must be at least 1");
  require(cg_tol > 0, ErrorKind::Config, "cg_tol must be positive");
  require(tv_inner >= 1, ErrorKind::Config, "tv_inner must be at least 1");
}

namespace {

DeconvResult solve_tikhonov(const PlaneSystem& sys, const std::vector<double>& g, const DeconvConfig& cfg, double mu) {
  DeconvResult res;
  const std::size_t n = sys.cols();
  res.f.assign(n, 0.0);
  const double gg = dot(g, g);
  res.objective.push_back(gg);
  const std::vector<double> b = sys.apply_adjoint(g);
  const double bnorm = norm2(b);
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  std::vector<double> r = b, p = b;
  double rr = dot(r, r);
  double prev_res = std::sqrt(rr);
  int growth = 0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    std::vector<double> q = sys.normal(p);
    for (std::size_t i = 0; i < n; ++i) q[i] += mu * p[i];
    const double pq = dot(p, q);
    if (!(pq > 0.0)) throw SolverError("conjugate gradients lost positive curvature", res.f);
    const double alpha = rr / pq;
    for (std::size_t i = 0; i < n; ++i) {
      res.f[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    const double rr_new = dot(r, r);
    res.iterations = it;
    res.objective.push_back(gg - dot(res.f, b) - dot(res.f, r));
    const double rn = std::sqrt(rr_new);
    growth = rn > prev_res ? growth + 1 : 0;
    if (growth >= 10) throw SolverError("residual grew for 10 consecutive iterations", res.f);
    if (!std::isfinite(rn)) throw SolverError("non-finite residual", res.f);
    prev_res = rn;
    if (rn <= cfg.cg_tol * bnorm) {
      res.converged = true;
      break;
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  return res;
}

DeconvResult solve_tv(const PlaneSystem& sys, const std::vector<double>& g, const DeconvConfig& cfg, double L,
                      double mu) {
  DeconvResult res;
  const std::size_t n = sys.cols();
  const TvDims dims{sys.grid().nt, sys.grid().nz, 1};
  const auto objective = [&](const std::vector<double>& f) {
    std::vector<double> r = sys.apply(f);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= g[i];
    return dot(r, r) + mu * tv_norm(f, dims);
  };
  std::vector<double> x(n, 0.0), y(n, 0.0), dual;
  double fx = objective(x);
  res.objective.push_back(fx);
  if (norm2(g) == 0.0) {
    res.f = x;
    res.converged = true;
    return res;
  }
  const double step = 1.0 / (2.0 * 1.05 * L);
  double t = 1.0;
  int growth = 0;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    std::vector<double> r = sys.apply(y);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= g[i];
    const std::vector<double> grad = sys.apply_adjoint(r);
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = y[i] - 2.0 * step * grad[i];
    z = tv_prox(z, dims, step * mu, cfg.tv_inner, &dual);
    const double fz = objective(z);
    if (!std::isfinite(fz)) throw SolverError("non-finite objective", x);
    std::vector<double> xn = fz <= fx ? z : x;
    growth = fz > fx ? growth + 1 : 0;
    if (growth >= 10) throw SolverError("objective failed to decrease for 10 consecutive iterations", x);
    const double fxn = std::min(fz, fx);
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = xn[i] + (t / tn) * (z[i] - xn[i]) + ((t - 1.0) / tn) * (xn[i] - x[i]);
      change += (xn[i] - x[i]) * (xn[i] - x[i]);
    }
    x = std::move(xn);
    fx = fxn;
    t = tn;
    res.iterations = it;
    res.objective.push_back(fx);
    if (std::sqrt(change) <= cfg.cg_tol * std::max(norm2(x), 1e-300) && fz <= fx) {
      res.converged = true;
      break;
    }
  }
  res.f = std::move(x);
  return res;
}

}  // namespace

DeconvResult deconvolve_plane(const PlaneSystem& sys, const std::vector<double>& g, const DeconvConfig& cfg) {
  cfg.validate();
  require(g.size() == sys.rows(), ErrorKind::Config, "DBP data size does not match the plane system");
  const double L = sys.normal_norm();
  const double mu = cfg.reg_weight * L;
  if (cfg.regularizer == Regularizer::Tikhonov) return solve_tikhonov(sys, g, cfg, mu);
  return solve_tv(sys, g, cfg, L, mu);
}

DeconvResult deconvolve_plane(const PlaneSystem& sys, const std::vector<DbpPlane>& g, const DeconvConfig& cfg) {
  require(g.size() == sys.arcs().size(), ErrorKind::Config, "need one DBP plane per arc");
  std::vector<double> stacked;
  for (std::size_t a = 0; a < g.size(); ++a) {
    require(g[a].grid == sys.grid(), ErrorKind::Config, "DBP plane grid does not match the system");
    require(g[a].arc.kind == sys.arcs()[a].kind, ErrorKind::Config, "DBP plane arcs are not in system order");
    stacked.insert(stacked.end(), g[a].g.begin(), g[a].g.end());
  }
  return deconvolve_plane(sys, stacked, cfg);
}

std::vector<double> RegularizedInversion::invert(const PlaneSystem& sys, const std::vector<double>& g) const {
  return deconvolve_plane(sys, g, cfg_).f;
}

ExternalOperator::ExternalOperator(std::string command, std::string work_dir)
    : command_(std::move(command)), work_dir_(std::move(work_dir)) {
  require(!command_.empty(), ErrorKind::Config, "external operator command is empty");
}

std::vector<double> ExternalOperator::invert(const PlaneSystem& sys, const std::vector<double>& g) const {
  namespace fs = std::filesystem;
  const PlaneGrid& pg = sys.grid();
  fs::create_directories(work_dir_);
  const std::string tag = std::string(to_string(sys.plane().direction)) + "_" + format_double(sys.plane().s);
  const fs::path in = fs::path(work_dir_) / ("in_" + tag);
  const fs::path out = fs::path(work_dir_) / ("out_" + tag);
  SliceImage img{static_cast<int>(sys.arcs().size()) * pg.nz, pg.nt, pg.dz, std::abs(pg.dt), g};
  Metadata meta;
  meta.set("direction", std::string(to_string(sys.plane().direction)));
  meta.set("s", sys.plane().s);
  std::string arcs;
  for (const ArcSpec& a : sys.arcs()) arcs += (arcs.empty() ? "" : ",") + std::string(to_string(a.kind));
  meta.set("arcs", arcs);
  meta.set("t0", pg.t0);
  meta.set("dt", pg.dt);
  meta.set("z0", pg.z0);
  write_image(img, in, meta);
  const std::string cmd = command_ + " '" + in.string() + "' '" + out.string() + "'";
  const int rc = std::system(cmd.c_str());
  require(rc == 0, ErrorKind::Io, "external operator failed with status " + std::to_string(rc) + ": " + cmd);
  const SliceImage res = read_image(out);
  require(res.rows == pg.nz && res.cols == pg.nt, ErrorKind::Format,
          "external operator returned a " + std::to_string(res.rows) + "x" + std::to_string(res.cols) + " image");
  return res.data;
}

Volume3D assemble_volume(const std::vector<std::vector<double>>& planes, PlaneDirection direction,
                         const GridShape& shape) {
  const int count = plane_count(shape, direction);
  require(static_cast<int>(planes.size()) == count, ErrorKind::Assembly,
          "expected " + std::to_string(count) + " planes, got " + std::to_string(planes.size()));
  const int nt = direction == PlaneDirection::Coronal ? shape.nx : shape.ny;
  Volume3D vol(shape);
  for (int p = 0; p < count; ++p) {
    require(planes[p].size() == static_cast<std::size_t>(nt) * shape.nz, ErrorKind::Assembly,
            "plane " + std::to_string(p) + " is missing or has the wrong size");
    for (int k = 0; k < shape.nz; ++k)
      for (int t = 0; t < nt; ++t) {
        const double v = planes[p][static_cast<std::size_t>(k) * nt + t];
        if (direction == PlaneDirection::Coronal) vol(t, p, k) = v; else vol(p, t, k) = v;
      }
  }
  return vol;
}

std::vector<std::vector<double>> disassemble_volume(const Volume3D& vol, PlaneDirection direction) {
  const GridShape& sh = vol.shape();
  const int count = plane_count(sh, direction);
  const int nt = direction == PlaneDirection::Coronal ? sh.nx : sh.ny;
  std::vector<std::vector<double>> planes(static_cast<std::size_t>(count));
  for (int p = 0; p < count; ++p) {
    planes[p].resize(static_cast<std::size_t>(nt) * sh.nz);
    for (int k = 0; k < sh.nz; ++k)
      for (int t = 0; t < nt; ++t)
        planes[p][static_cast<std::size_t>(k) * nt + t] =
            direction == PlaneDirection::Coronal ? vol(t, p, k) : vol(p, t, k);
  }
  return planes;
}

Volume3D deconvolve_direction(const std::vector<Volume3D>& stacks, const std::vector<ArcKind>& arcs,
                              const Volume3D* valid, const Volume3D* support, const ScanGeometry& geom,
                              PlaneDirection direction, const DeconvOperator& op) {
  require(!stacks.empty() && stacks.size() == arcs.size(), ErrorKind::Config, "need one DBP stack per arc");
  const GridShape& sh = stacks[0].shape();
  for (const Volume3D& s : stacks) require(s.shape() == sh, ErrorKind::Config, "DBP stacks differ in shape");
  if (valid) require(valid->shape() == sh, ErrorKind::Config, "validity mask shape does not match the DBP stacks");
  if (support) require(support->shape() == sh, ErrorKind::Config, "support mask shape does not match the DBP stacks");
  const int count = plane_count(sh, direction);
  std::vector<std::vector<double>> planes(static_cast<std::size_t>(count));
  std::vector<std::vector<double>> stack_planes[2];
  for (std::size_t a = 0; a < stacks.size(); ++a) stack_planes[a] = disassemble_volume(stacks[a], direction);
  std::vector<std::vector<double>> valid_planes;
  if (valid) valid_planes = disassemble_volume(*valid, direction);
  std::vector<std::vector<double>> support_planes;
  if (support) support_planes = disassemble_volume(*support, direction);
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      const PlaneOfInterest poi = plane_of_interest(geom, direction, plane_offset(sh, direction, static_cast<int>(p)));
      std::vector<ArcSpec> arc_specs;
      for (ArcKind k : arcs) arc_specs.push_back(k == ArcKind::Short ? short_arc(poi) : k == ArcKind::Complement
                                                                                          ? complement_arc(poi)
                                                                                          : ArcSpec::full());
      PlaneSystem sys = build_plane_system(geom, poi, arc_specs, plane_grid(poi, sh));
      if (valid) sys.set_row_weights(valid_planes[p]);
      if (support) sys.set_support(support_planes[p]);
      std::vector<double> g;
      for (std::size_t a = 0; a < stacks.size(); ++a) {
        std::vector<double> ga = stack_planes[a][p];
        if (valid)
          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= valid_planes[p][i];
        g.insert(g.end(), ga.begin(), ga.end());
      }
      planes[p] = op.invert(sys, g);
    }
  });
  return assemble_volume(planes, direction, sh);
}

}  // namespace cbct
