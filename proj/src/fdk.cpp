#include "cbct/fdk.hpp"

#include <cmath>
#include <numbers>

#include "cbct/error.hpp"
#include "cbct/fft.hpp"
#include "cbct/parallel.hpp"
#include "cbct/projector.hpp"

namespace cbct {

namespace {
constexpr double kPi = std::numbers::pi;

void check_full_scan(const ProjectionSet& proj) {
  const auto& l = proj.lambdas();
  const int n = proj.n_views();
  require(n >= 2, ErrorKind::Config, "FDK needs at least two views");
  const double step = 2.0 * kPi / n;
  for (int j = 0; j < n; ++j)
    require(std::abs(l[j] - (l[0] + j * step)) <= 1e-6 * step, ErrorKind::Config,
            "FDK requires uniformly spaced views over a full turn");
}
}  // namespace

RampWindow parse_ramp_window(std::string_view name) {
  if (name == "ram-lak") return RampWindow::RamLak;
  if (name == "shepp-logan") return RampWindow::SheppLogan;
  fail(ErrorKind::Config, "unknown ramp filter '" + std::string(name) + "'");
}

void FdkConfig::validate() const {
  require(cutoff > 0 && cutoff <= 1, ErrorKind::Config, "filter cutoff must lie in (0, 1]");
}

std::vector<double> ramp_response(int padded_length, double du, const FdkConfig& cfg) {
  cfg.validate();
  const int P = padded_length;
  // Spatial band-limited ramp: h[0] = 1/(4 du^2), h[odd n] = -1/(pi n du)^2.
  std::vector<double> h(static_cast<std::size_t>(P), 0.0);
  h[0] = 1.0 / (4.0 * du * du);
  for (int n = 1; n < P / 2; n += 2) {
    const double v = -1.0 / ((kPi * n * du) * (kPi * n * du));
    h[n] = v;
    h[P - n] = v;
  }
  std::vector<double> response(static_cast<std::size_t>(P / 2 + 1));
  const double fc = 0.5 * cfg.cutoff;
  for (int k = 0; k <= P / 2; ++k) {
    double acc = 0.0;
    for (int n = 0; n < P; ++n) acc += h[n] * std::cos(2.0 * kPi * k * n / P);
    const double f = static_cast<double>(k) / P;
    double w = f <= fc + 1e-12 ? 1.0 : 0.0;
    if (cfg.filter == RampWindow::SheppLogan && k > 0) {
      const double x = kPi * f / (2.0 * fc);
      w *= std::sin(x) / x;
    }
    response[k] = du * acc * w;
  }
  return response;
}

void fdk_filter_projections(ProjectionSet& proj, const ScanGeometry& geom, const FdkConfig& cfg) {
  const double R = geom.source_radius;
  const double D = geom.source_detector;
  const double du_iso = proj.pitch() * R / D;
  const int padded = next_pow2(2 * proj.nu());
  const RowFilter filter(proj.nu(), padded, ramp_response(padded, du_iso, cfg));
  const int nu = proj.nu(), nv = proj.nv();
  parallel_for(static_cast<std::size_t>(proj.n_views()) * nv, [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      const int view = static_cast<int>(r / nv);
      const int iv = static_cast<int>(r % nv);
      const double v = (iv - 0.5 * (nv - 1)) * proj.pitch();
      std::span<double> row(&proj.at(view, iv, 0), static_cast<std::size_t>(nu));
      for (int iu = 0; iu < nu; ++iu) {
        const double u = (iu - 0.5 * (nu - 1)) * proj.pitch();
        row[iu] *= D / std::sqrt(D * D + u * u + v * v);
      }
      filter.apply(row);
    }
  });
}

Volume3D fdk_reconstruct(const ProjectionSet& proj, const ScanGeometry& geom, const FdkConfig& cfg,
                         const GridShape& grid) {
  cfg.validate();
  geom.validate();
  grid.validate();
  require(!cfg.short_scan, ErrorKind::Unsupported, "short-scan (Parker) weighting is not implemented");
  check_full_scan(proj);
  ProjectionSet filtered = proj;
  fdk_filter_projections(filtered, geom, cfg);
  Volume3D vol = back_project(filtered, geom, grid, BackprojectionWeights::Fdk);
  const double scale = 0.5 * (2.0 * kPi / proj.n_views());
  for (double& v : vol.values()) v *= scale;
  return vol;
}

}  // namespace cbct
