// One PASS/FAIL line per acceptance criterion. Pass criterion numbers as
// arguments to run a subset; the exit status is nonzero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cbct/dbp.hpp"
#include "cbct/deconv.hpp"
#include "cbct/error.hpp"
#include "cbct/fdk.hpp"
#include "cbct/hilbert.hpp"
#include "cbct/io.hpp"
#include "cbct/mbir.hpp"
#include "cbct/metrics.hpp"
#include "cbct/parallel.hpp"
#include "cbct/phantoms.hpp"
#include "cbct/pipeline.hpp"
#include "cbct/projector.hpp"

using namespace cbct;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double rel_l2(std::span<const double> a, std::span<const double> ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ref[i]) * (a[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  return std::sqrt(num / den);
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "cbct_acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Average ranks, so ties share a rank.
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t q = i; q <= j; ++q) r[idx[q]] = 0.5 * (i + j);
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i] / n;
    my += ry[i] / n;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

ScanGeometry box_geometry(int views, int cells) {
  ScanGeometry g;
  g.source_radius = 200.0;
  g.source_detector = 400.0;
  g.nu = g.nv = cells;
  g.pitch = 4.0;
  g.n_views = views;
  return g;
}

PipelineConfig config_from(const std::string& ini, const std::string& dir) {
  PipelineConfig c = parse_pipeline_config(ini);
  c.output_dir = scratch(dir);
  return c;
}

const char* kMiniDisks = "[geometry]\npreset = mini\n[volume]\nn = 64\nspacing = 4\n[phantom]\ntype = disks\ntable = d\n";

Outcome adjoint() {
  ScanGeometry g = geometry_preset("mini");
  g.n_views = 16;
  const GridShape grid = GridShape::centered(32, 4.0);
  double worst = 0.0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const Volume3D x(grid, random_values(grid.voxel_count(), s));
    ProjectionSet y = forward_project(Volume3D(grid), g, ArcSpec::full());
    y.values() = random_values(y.values().size(), 1000 + s);
    const ProjectionSet ax = forward_project(x, g, ArcSpec::full());
    const Volume3D aty = back_project(y, g, grid, BackprojectionWeights::None);
    const double gap = std::abs(dot(ax.data(), y.data()) - dot(x.data(), aty.data()));
    worst = std::max(worst, gap / (std::sqrt(dot(ax.data(), ax.data())) * std::sqrt(dot(y.data(), y.data()))));
  }
  return {worst <= 1e-4, "worst relative gap " + fmt("%.2e", worst)};
}

Outcome projector_oracle() {
  const ScanGeometry g = geometry_preset("desk");
  const double r = 80.0;
  const GridShape grid = GridShape::centered(192, 1.0);
  const std::vector<Primitive> s{Primitive::sphere({0, 0, 0}, r)};
  const Volume3D v = make_primitive_volume(s, grid);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> lam(0.0, 2 * kPi), uv(-1.5 * r, 1.5 * r);
  int tested = 0;
  double worst = 0.0;
  while (tested < 1000) {
    const double l = lam(rng), u = uv(rng), w = uv(rng);
    const ViewFrame f = view_frame(g, l);
    const Vec3 d = normalized(f.source + g.source_detector * f.central + u * f.u_axis + Vec3{0, 0, w} - f.source);
    const Vec3 o = -f.source;
    if (norm(o - dot(o, d) * d) > 0.7 * r) continue;
    const double ref = analytic_projection(s, g, l, u, w);
    worst = std::max(worst, std::abs(project_ray(v, f.source, d) - ref) / ref);
    ++tested;
  }
  return {worst <= 0.01, "1000 rays with impact parameter <= 0.7 r, worst relative error " + fmt("%.4f", worst)};
}

Outcome fdk_midplane() {
  const ScanGeometry g = geometry_preset("desk");
  const GridShape grid = GridShape::centered(128, 2.0);
  const std::vector<Primitive> s{Primitive::sphere({0, 0, 0}, 80.0)};
  const Volume3D truth = make_primitive_volume(s, grid);
  const Volume3D rec = fdk_reconstruct(forward_project(truth, g, ArcSpec::full()), g, FdkConfig{}, grid);
  double worst = 0.0;
  for (int k : {63, 64}) {
    const SliceImage a = extract_slice(rec, SliceAxis::Axial, k), b = extract_slice(truth, SliceAxis::Axial, k);
    worst = std::max(worst, nmse(a.data, b.data));
  }
  return {worst <= 1e-2, "central-slice NMSE " + fmt("%.2e", worst)};
}

Outcome cone_artifact_signature() {
  const ScanGeometry g = geometry_preset("desk");
  const GridShape grid = GridShape::centered(128, 2.0);
  const Volume3D truth = make_disk_phantom(DiskPhantomSpec::table('d'), grid);
  const Volume3D rec = fdk_reconstruct(forward_project(truth, g, ArcSpec::full()), g, FdkConfig{}, grid);
  std::vector<double> z, e;
  for (const SliceMetrics& s : artifact_profile(rec, truth))
    if (s.nmse) {
      z.push_back(std::abs(s.z_mm));
      e.push_back(*s.nmse);
    }
  const double rho = spearman(z, e);
  return {rho >= 0.9, "Spearman(|z|, slice NMSE) " + fmt("%.3f", rho) + " over " + std::to_string(z.size()) + " slices"};
}

Outcome full_circle_cancellation() {
  const ScanGeometry g = geometry_preset("mini");
  const GridShape grid = GridShape::centered(64, 4.0);
  const std::vector<Primitive> s{Primitive::sphere({0, 0, 0}, 60.0)};
  const ProjectionSet proj = forward_project(make_primitive_volume(s, grid), g, ArcSpec::full());
  const PlaneOfInterest p = plane_of_interest(g, PlaneDirection::Coronal, 0.0);
  const PlaneGrid pg = plane_grid(p, grid);
  const DbpPlane full = compute_dbp(proj, g, p, ArcSpec::full(), pg);
  const DbpPlane part = compute_dbp(proj, g, p, short_arc(p), pg);
  double mf = 0.0, ms = 0.0;
  for (double x : full.g) mf = std::max(mf, std::abs(x));
  for (double x : part.g) ms = std::max(ms, std::abs(x));
  return {mf <= 1e-2 * ms, "|g_full|/|g_short| " + fmt("%.2e", mf / ms)};
}

Outcome hilbert_involution() {
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const int n = 128 + 8 * static_cast<int>(seed);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    std::vector<double> x(n, 0.0);
    for (int k = 1; k <= n / 4; ++k) {
      const double a = gauss(rng), b = gauss(rng);
      for (int i = 0; i < n; ++i) x[i] += a * std::cos(2 * kPi * k * i / n) + b * std::sin(2 * kPi * k * i / n);
    }
    const auto hh = hilbert_periodic(hilbert_periodic(x));
    std::vector<double> neg(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
    worst = std::max(worst, rel_l2(hh, neg));
  }
  return {worst <= 1e-3, "worst |H(H(x)) + x| / |x| " + fmt("%.2e", worst)};
}

// Stacked thin boxes with a smooth cos^2 profile: the plane model assumes
// locally z-invariant structure, so the phantom stays smooth along z.
Outcome cross_model_consistency() {
  ScanGeometry g = geometry_preset("desk");
  g.n_views = 720;
  const int n = 64;
  const GridShape grid = GridShape::centered(n, 2.0);
  std::vector<Primitive> prims;
  const int layers = 24;
  for (int q = 1; q <= layers; ++q) {
    const double a = static_cast<double>(q) / layers;
    const double step = std::pow(std::cos(kPi / 2 * (a - 1.0 / layers)), 2) - std::pow(std::cos(kPi / 2 * a), 2);
    prims.push_back(Primitive::box({0, 0, 40}, {45 * a, 45 * a, 10 * a}, step));
    prims.push_back(Primitive::box({10, -5, -30}, {30 * a, 30 * a, 8 * a}, 0.7 * step));
  }
  const Volume3D vol = make_primitive_volume(prims, grid);
  const ProjectionSet proj = forward_project(vol, g, ArcSpec::full());
  double worst = 0.0;
  for (int idx : {32, 20})
    for (PlaneDirection dir : {PlaneDirection::Coronal, PlaneDirection::Sagittal}) {
      const PlaneOfInterest p = plane_of_interest(g, dir, plane_offset(grid, dir, idx));
      const PlaneGrid pg = plane_grid(p, grid);
      std::vector<double> f(pg.size());
      for (int k = 0; k < n; ++k)
        for (int t = 0; t < n; ++t) f[k * n + t] = dir == PlaneDirection::Coronal ? vol(t, idx, k) : vol(idx, t, k);
      for (const ArcSpec& arc : {short_arc(p), complement_arc(p)}) {
        const DbpPlane d = compute_dbp(proj, g, p, arc, pg);
        const std::vector<double> m = build_plane_system(g, p, {arc}, pg).apply(f);
        worst = std::max(worst, rel_l2(m, d.g));
      }
    }
  return {worst <= 0.05, "worst relative L2 over 8 plane/arc pairs " + fmt("%.4f", worst)};
}

Outcome pipeline_beats_fdk() {
  const PipelineConfig c = config_from(
      "[geometry]\npreset = desk\n[volume]\nn = 128\nspacing = 2\n[phantom]\ntype = disks\ntable = d\n", "desk");
  const auto t0 = std::chrono::steady_clock::now();
  const PipelineResult r = run_pipeline(c);
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  const double best_single = std::min(r.coronal.nmse, r.sagittal.nmse);
  const bool pass = r.blended.nmse <= 0.7 * r.fdk.nmse && r.blended.nmse <= best_single && minutes < 30.0;
  return {pass, "FDK " + fmt("%.5f", r.fdk.nmse) + ", coronal " + fmt("%.5f", r.coronal.nmse) + ", sagittal " +
                    fmt("%.5f", r.sagittal.nmse) + ", blended " + fmt("%.5f", r.blended.nmse) + " in " +
                    fmt("%.1f", minutes) + " min"};
}

Outcome cone_angle_trend() {
  const PipelineConfig c = config_from(kMiniDisks, "sweep_angle");
  const auto rows = run_cone_angle_sweep(c, {6.0, 8.0, 10.0, 12.0});
  bool increasing = true;
  std::string fdk_list, pipe_list;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i && rows[i].fdk.nmse <= rows[i - 1].fdk.nmse) increasing = false;
    fdk_list += (i ? " " : "") + fmt("%.4f", rows[i].fdk.nmse);
    pipe_list += (i ? " " : "") + fmt("%.4f", rows[i].pipeline.nmse);
  }
  const double fdk_ratio = rows.back().fdk.nmse / rows.front().fdk.nmse;
  const double pipe_ratio = rows.back().pipeline.nmse / rows.front().pipeline.nmse;
  return {increasing && pipe_ratio < fdk_ratio, "FDK NMSE [" + fdk_list + "] ratio " + fmt("%.2f", fdk_ratio) +
                                                    ", pipeline NMSE [" + pipe_list + "] ratio " +
                                                    fmt("%.2f", pipe_ratio)};
}

Outcome noise_trend() {
  PipelineConfig c = config_from(std::string(kMiniDisks) + "inside = 0.02\n", "sweep_noise");
  c.sweep_realizations = 5;
  const auto rows = run_noise_sweep(c, {100.0, 300.0, 1000.0});
  double lo = 1e300, hi = -1e300;
  bool ahead = true;
  std::string detail;
  for (const SweepRow& r : rows) {
    lo = std::min(lo, *r.snr_db);
    hi = std::max(hi, *r.snr_db);
    if (r.pipeline.psnr_db < r.fdk.psnr_db) ahead = false;
    detail += "I0 " + fmt("%g", r.parameter) + ": SNR " + fmt("%.1f", *r.snr_db) + " dB, PSNR FDK " +
              fmt("%.2f", r.fdk.psnr_db) + " pipeline " + fmt("%.2f", r.pipeline.psnr_db) + "; ";
  }
  return {ahead && hi - lo >= 4.0, detail + "SNR span " + fmt("%.1f", hi - lo) + " dB"};
}

Outcome mbir_checks() {
  std::string detail;
  bool pass = true;
  {
    const ScanGeometry g = box_geometry(12, 24);
    const GridShape grid = GridShape::centered(16, 4.0);
    const std::vector<Primitive> s{Primitive::sphere({0, 0, 0}, 20.0), Primitive::sphere({8, 4, 0}, 6.0, 0.5)};
    const ProjectionSet y = forward_project(make_primitive_volume(s, grid), g, ArcSpec::full());
    MbirConfig cfg;
    cfg.lambda_tv = default_lambda_tv(y, g, grid);
    cfg.n_iter = 50;
    const MbirResult r = mbir_reconstruct(y, g, cfg, Volume3D(grid));
    bool mono = r.objective.size() == 51;
    for (std::size_t i = 1; i < r.objective.size(); ++i) mono = mono && r.objective[i] <= r.objective[i - 1];
    pass = pass && mono;
    detail += std::string("monotone over 50 iterations: ") + (mono ? "yes" : "no");
  }
  {
    const ScanGeometry g = box_geometry(6, 16);
    const GridShape grid = GridShape::centered(8, 4.0);
    const Volume3D f(grid, random_values(grid.voxel_count(), 3));
    const ProjectionSet y = forward_project(Volume3D(grid, random_values(grid.voxel_count(), 4)), g, ArcSpec::full());
    const Volume3D grad = mbir_data_gradient(f, y, g);
    const auto dir = random_values(grid.voxel_count(), 5);
    const double h = 1e-4;
    Volume3D fp = f, fm = f;
    for (std::size_t i = 0; i < dir.size(); ++i) {
      fp.values()[i] += h * dir[i];
      fm.values()[i] -= h * dir[i];
    }
    const double fd = (mbir_objective(fp, y, g, 0.0) - mbir_objective(fm, y, g, 0.0)) / (2 * h);
    const double an = dot(grad.data(), dir);
    const double err = std::abs(fd - an) / std::abs(an);
    pass = pass && err <= 1e-4;
    detail += ", gradient vs differences " + fmt("%.1e", err);
  }
  {
    const ScanGeometry g = box_geometry(32, 48);
    const GridShape grid = GridShape::centered(16, 4.0);
    const std::vector<Primitive> s{Primitive::sphere({0, 0, 0}, 20.0), Primitive::box({-8, 6, 2}, {4, 4, 4}, 0.7)};
    const ProjectionSet y = forward_project(make_primitive_volume(s, grid), g, ArcSpec::full());
    const Volume3D ls = cgls_reconstruct(y, g, grid, 300);
    MbirConfig cfg;
    cfg.lambda_tv = 0.0;
    cfg.n_iter = 1000;
    const MbirResult r = mbir_reconstruct(y, g, cfg, Volume3D(grid));
    const double err = rel_l2(r.f.data(), ls.data());
    pass = pass && err <= 0.01;
    detail += ", lambda = 0 vs CGLS " + fmt("%.4f", err);
  }
  return {pass, detail};
}

Outcome metrics_verbatim() {
  const auto f = random_values(256, 9);
  const std::vector<double> ones(4, 1.0), zeros(4, 0.0);
  const double p = psnr(zeros, ones, 2, 2);
  bool pass = nmse(f, f) == 0.0 && ssim(f, f, 2.0) == 1.0 && std::abs(p - 20.0 * std::log10(4.0 / 2.0)) <= 1e-9;
  double worst = 0.0;
  for (std::uint64_t seed = 20; seed < 40; ++seed) {
    const auto x = random_values(300, seed), y = random_values(300, seed + 100);
    const double n = 300.0, L = 2.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i] / n;
      my += y[i] / n;
    }
    double vx = 0, vy = 0, c = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      vx += (x[i] - mx) * (x[i] - mx) / n;
      vy += (y[i] - my) * (y[i] - my) / n;
      c += (x[i] - mx) * (y[i] - my) / n;
    }
    const double c1 = std::pow(0.01 * L, 2), c2 = std::pow(0.03 * L, 2);
    const double naive = (2 * mx * my + c1) * (2 * c + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    worst = std::max(worst, std::abs(ssim(x, y, L) - naive));
  }
  pass = pass && worst <= 1e-12;
  return {pass, "PSNR example " + fmt("%.10f", p) + " dB, SSIM vs naive " + fmt("%.1e", worst)};
}

Outcome determinism() {
  const std::string ini =
      "[geometry]\npreset = mini\n[volume]\nn = 32\nspacing = 8\n[phantom]\ntype = disks\ntable = d\n"
      "[noise]\nenabled = true\ni0 = 2000\n[run]\nseed = 77\n";
  std::string noise_ref, report_ref, blend_ref;
  bool same = true;
  for (int w : {1, 2, 8}) {
    PipelineConfig c = config_from(ini, "workers_" + std::to_string(w));
    c.workers = w;
    run_pipeline(c);
    const std::string noise = slurp(c.output_dir / "projections_noisy.raw");
    const std::string report = slurp(c.output_dir / "report.json");
    const std::string blend = slurp(c.output_dir / "blended.raw");
    if (w == 1) {
      noise_ref = noise;
      report_ref = report;
      blend_ref = blend;
    } else {
      same = same && noise == noise_ref && report == report_ref && blend == blend_ref;
    }
  }
  set_worker_count(1);
  return {same && !noise_ref.empty(), same ? "noisy projections, volumes and reports bit-identical for 1, 2, 8 workers"
                                           : "outputs differ between worker counts"};
}

}  // namespace

int main(int argc, char** argv) {
  struct Check {
    const char* name;
    std::function<Outcome()> run;
    double limit_s = 0.0;  // 0: no runtime bound
  };
  const std::vector<Check> checks{
      {"adjoint correctness", adjoint, 60.0},
      {"projector accuracy", projector_oracle},
      {"mid-plane FDK exactness", fdk_midplane, 300.0},
      {"cone-beam artifact signature", cone_artifact_signature},
      {"full-circle DBP cancellation", full_circle_cancellation},
      {"Hilbert involution", hilbert_involution},
      {"cross-model consistency", cross_model_consistency},
      {"pipeline beats FDK", pipeline_beats_fdk, 1800.0},
      {"cone-angle sweep trend", cone_angle_trend},
      {"noise robustness trend", noise_trend},
      {"MBIR correctness", mbir_checks},
      {"metrics verbatim", metrics_verbatim},
      {"determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = checks[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (checks[i].limit_s > 0 && secs > checks[i].limit_s) {
      o.pass = false;
      o.detail += ", over the " + fmt("%.0f", checks[i].limit_s) + " s budget";
    }
    std::printf("criterion %2d %-30s %s  %s (%.1f s)\n", id, checks[i].name, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
                secs);
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d failed\n", failures);
  return failures ? 1 : 0;
}
