#include "cbct/mbir.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cbct/error.hpp"
#include "cbct/projector.hpp"
#include "cbct/tv.hpp"

namespace cbct {

namespace {

TvDims dims_of(const GridShape& g) { return {g.nx, g.ny, g.nz}; }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

ProjectionSet project_like(const Volume3D& f, const ScanGeometry& geom, const ProjectionSet& like) {
  ProjectionSet out(like.nu(), like.nv(), like.pitch(), like.lambdas());
  forward_project_into(f, geom, out);
  return out;
}

double half_residual(const ProjectionSet& af, const ProjectionSet& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < af.values().size(); ++i) {
    const double r = af.values()[i] - y.values()[i];
    s += r * r;
  }
  return 0.5 * s;
}

ProjectionSet residual(const ProjectionSet& af, const ProjectionSet& y) {
  ProjectionSet r = af;
  for (std::size_t i = 0; i < r.values().size(); ++i) r.values()[i] -= y.values()[i];
  return r;
}

}  // namespace

StepRule parse_step_rule(std::string_view name) {
  if (name == "fixed") return StepRule::Fixed;
  if (name == "backtracking") return StepRule::Backtracking;
  fail(ErrorKind::Config, "unknown step rule '" + std::string(name) + "'");
}

void MbirConfig::validate() const {
  require(lambda_tv >= 0, ErrorKind::Config, "lambda_tv must be non-negative");
  require(n_iter >= 1, ErrorKind::Config, "n_iter must be at least 1");
  require(tv_inner >= 1, ErrorKind::Config, "tv_inner must be at least 1");
  require(step_rule == StepRule::Backtracking || step0 > 0, ErrorKind::Config, "the fixed step rule needs step0 > 0");
}

double mbir_objective(const Volume3D& f, const ProjectionSet& y, const ScanGeometry& geom, double lambda_tv) {
  const ProjectionSet af = project_like(f, geom, y);
  return half_residual(af, y) + lambda_tv * tv_norm(f.data(), dims_of(f.shape()));
}

Volume3D mbir_data_gradient(const Volume3D& f, const ProjectionSet& y, const ScanGeometry& geom) {
  return back_project(residual(project_like(f, geom, y), y), geom, f.shape(), BackprojectionWeights::None);
}

double default_lambda_tv(const ProjectionSet& y, const ScanGeometry& geom, const GridShape& grid) {
  const Volume3D aty = back_project(y, geom, grid, BackprojectionWeights::None);
  double m = 0.0;
  for (double v : aty.values()) m = std::max(m, std::abs(v));
  return 1e-2 * m;
}

double projector_normal_norm(const ScanGeometry& geom, const GridShape& grid, const std::vector<double>& lambdas,
                             int iterations) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.5, 1.5);
  Volume3D v(grid);
  for (double& x : v.values()) x = U(rng);
  double est = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double n = std::sqrt(dot(v.data(), v.data()));
    if (n == 0.0) return 0.0;
    for (double& x : v.values()) x /= n;
    Volume3D w = back_project(forward_project(v, geom, lambdas), geom, grid, BackprojectionWeights::None);
    est = dot(v.data(), w.data());
    v = std::move(w);
  }
  return est;
}

MbirResult mbir_reconstruct(const ProjectionSet& y, const ScanGeometry& geom, const MbirConfig& cfg, const Volume3D& f0) {
  cfg.validate();
  f0.validate();
  y.validate();
  const GridShape& grid = f0.shape();
  const TvDims dims = dims_of(grid);
  double step = cfg.step0;
  if (step <= 0) step = 1.0 / (1.05 * projector_normal_norm(geom, grid, y.lambdas()));

  MbirResult res{f0, {}, 0.0};
  ProjectionSet ax = project_like(res.f, geom, y);
  double data_x = half_residual(ax, y);
  double obj_x = data_x + cfg.lambda_tv * tv_norm(res.f.data(), dims);
  res.objective.push_back(obj_x);
  std::vector<double> dual;
  int growth = 0;

  for (int it = 0; it < cfg.n_iter; ++it) {
    const Volume3D grad = back_project(residual(ax, y), geom, grid, BackprojectionWeights::None);
    bool accepted = false;
    for (int attempt = 0; attempt < 40; ++attempt) {
      std::vector<double> z(res.f.values().size());
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = res.f.values()[i] - step * grad.values()[i];
      std::vector<double> trial_dual = dual;
      z = tv_prox(z, dims, step * cfg.lambda_tv, cfg.tv_inner, &trial_dual);
      Volume3D fz(grid, std::move(z));
      ProjectionSet az = project_like(fz, geom, y);
      const double data_z = half_residual(az, y);
      const double obj_z = data_z + cfg.lambda_tv * tv_norm(fz.data(), dims);
      if (!std::isfinite(obj_z)) throw SolverError("non-finite objective", res.f.values());

      if (cfg.step_rule == StepRule::Fixed) {
        growth = obj_z > obj_x ? growth + 1 : 0;
        if (growth >= 10) throw SolverError("objective grew for 10 consecutive iterations", fz.values());
        res.f = std::move(fz);
        ax = std::move(az);
        obj_x = obj_z;
        accepted = true;
        break;
      }
      double lin = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < fz.values().size(); ++i) {
        const double d = fz.values()[i] - res.f.values()[i];
        lin += grad.values()[i] * d;
        sq += d * d;
      }
      const bool bound_holds = data_z <= data_x + lin + sq / (2.0 * step) + 1e-12 * std::abs(data_x);
      if (!bound_holds) {
        step *= 0.5;
        continue;
      }
      if (obj_z <= obj_x) {
        res.f = std::move(fz);
        ax = std::move(az);
        data_x = data_z;
        obj_x = obj_z;
        dual = std::move(trial_dual);
      } else {
        step *= 0.5;  // inexact prox overshot; retry next iteration with a shorter step
      }
      accepted = true;
      break;
    }
    if (!accepted) throw SolverError("backtracking failed to find a descent step", res.f.values());
    data_x = half_residual(ax, y);
    res.objective.push_back(obj_x);
  }
  res.final_step = step;
  return res;
}

Volume3D cgls_reconstruct(const ProjectionSet& y, const ScanGeometry& geom, const GridShape& grid, int iterations) {
  require(iterations >= 1, ErrorKind::Config, "CGLS needs at least one iteration");
  Volume3D x(grid);
  ProjectionSet r = y;
  Volume3D s = back_project(r, geom, grid, BackprojectionWeights::None);
  Volume3D p = s;
  double gamma = dot(s.data(), s.data());
  for (int it = 0; it < iterations && gamma > 0; ++it) {
    const ProjectionSet q = project_like(p, geom, y);
    const double qq = dot(q.data(), q.data());
    if (qq == 0.0) break;
    const double alpha = gamma / qq;
    for (std::size_t i = 0; i < x.values().size(); ++i) x.values()[i] += alpha * p.values()[i];
    for (std::size_t i = 0; i < r.values().size(); ++i) r.values()[i] -= alpha * q.values()[i];
    s = back_project(r, geom, grid, BackprojectionWeights::None);
    const double gnew = dot(s.data(), s.data());
    const double beta = gnew / gamma;
    gamma = gnew;
    for (std::size_t i = 0; i < p.values().size(); ++i) p.values()[i] = s.values()[i] + beta * p.values()[i];
  }
  return x;
}

}  // namespace cbct
