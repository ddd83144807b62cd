#include "cbct/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "cbct/blend.hpp"
#include "cbct/deconv.hpp"
#include "cbct/error.hpp"
#include "cbct/fdk.hpp"
#include "cbct/io.hpp"
#include "cbct/parallel.hpp"
#include "cbct/phantoms.hpp"
#include "cbct/projector.hpp"

namespace cbct {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

template <class F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const SolverError& e) {
    throw SolverError(std::string("stage '") + name + "': " + e.what(), e.iterate());
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("stage '") + name + "': " + e.what());
  }
}

ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json report_json(const MetricReport& r) {
  ordered_json j;
  j["nmse"] = number(r.nmse);
  j["psnr_db"] = number(r.psnr_db);
  j["psnr_standard_db"] = number(r.psnr_standard_db);
  j["ssim"] = number(r.ssim);
  if (!r.per_slice.empty()) {
    ordered_json rows = ordered_json::array();
    for (const SliceMetrics& s : r.per_slice) {
      const auto opt = [](const std::optional<double>& v) { return v ? number(*v) : ordered_json(nullptr); };
      rows.push_back({{"z_mm", s.z_mm}, {"nmse", opt(s.nmse)}, {"psnr_db", opt(s.psnr_db)}, {"ssim", opt(s.ssim)}});
    }
    j["per_slice"] = rows;
  }
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + tmp.string());
    out << text;
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

MetricReport mean_report(const std::vector<MetricReport>& rs) {
  MetricReport m;
  for (const MetricReport& r : rs) {
    m.nmse += r.nmse / rs.size();
    m.psnr_db += r.psnr_db / rs.size();
    m.psnr_standard_db += r.psnr_standard_db / rs.size();
    m.ssim += r.ssim / rs.size();
  }
  return m;
}

ProjectionSet simulate(const PipelineConfig& cfg, const Volume3D& truth) {
  return stage("project", [&] { return forward_project(truth, cfg.geometry, ArcSpec::full()); });
}

double degrees_to_radians(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace

Volume3D make_phantom(const PhantomConfig& cfg, const GridShape& grid) {
  switch (cfg.kind) {
    case PhantomKind::Disks: return make_disk_phantom(cfg.disks, grid);
    case PhantomKind::Sphere: {
      const Primitive s = Primitive::sphere({0, 0, 0}, cfg.sphere_radius, cfg.sphere_value);
      return make_primitive_volume(std::span(&s, 1), grid);
    }
    case PhantomKind::Zero: return Volume3D(grid);
  }
  return Volume3D(grid);
}

double phantom_radius(const PhantomConfig& cfg, const GridShape& grid) {
  switch (cfg.kind) {
    case PhantomKind::Disks: return cfg.disks.disk_radius;
    case PhantomKind::Sphere: return cfg.sphere_radius;
    case PhantomKind::Zero: break;
  }
  return 0.5 * std::max(grid.nx * grid.spacing.x, grid.ny * grid.spacing.y);
}

std::pair<int, int> covered_slab(const ScanGeometry& geom, const GridShape& grid, double half_angle, double r_obj) {
  const double zmax = std::tan(half_angle) * (geom.source_radius - r_obj);
  int begin = grid.nz, end = 0;
  for (int k = 0; k < grid.nz; ++k)
    if (std::abs(grid.z(k)) <= zmax) {
      begin = std::min(begin, k);
      end = k + 1;
    }
  require(begin < end, ErrorKind::Config, "no axial slice lies inside the covered slab");
  return {begin, end};
}

ReconstructionSet reconstruct_all(const PipelineConfig& cfg, const ProjectionSet& proj_in, double half_angle,
                                  const fs::path& operator_dir, const fs::path* artifact_dir) {
  const ScanGeometry& geom = cfg.geometry;
  const GridShape grid = cfg.grid();
  ProjectionSet proj = proj_in;
  const double row_limit = geom.source_detector * std::tan(half_angle);
  stage("crop", [&] {
    mask_detector_rows(proj, geom, half_angle);
    return 0;
  });
  ReconstructionSet out;
  const auto save = [&](const Volume3D& v, const std::string& name, const Metadata& meta = {}) {
    if (artifact_dir) write_volume(v, *artifact_dir / name, meta);
  };
  out.fdk = stage("fdk", [&] { return fdk_reconstruct(proj, geom, cfg.fdk, grid); });
  save(out.fdk, "fdk");
  out.dbp = stage("dbp", [&] { return compute_dbp_volumes(proj, geom, grid, row_limit, cfg.support_threshold); });
  for (PlaneDirection d : {PlaneDirection::Coronal, PlaneDirection::Sagittal})
    for (ArcKind a : {ArcKind::Short, ArcKind::Complement}) {
      Metadata m;
      m.set("kind", std::string("dbp"));
      m.set("direction", std::string(to_string(d)));
      m.set("arc", std::string(to_string(a)));
      save(out.dbp.stack(d, a), std::string("dbp_") + to_string(d) + "_" + to_string(a), m);
    }
  save(out.dbp.valid, "dbp_valid");
  save(out.dbp.support, "dbp_support");
  std::unique_ptr<DeconvOperator> op;
  if (cfg.operator_cmd.empty()) {
    op = std::make_unique<RegularizedInversion>(cfg.deconv);
  } else {
    op = std::make_unique<ExternalOperator>(cfg.operator_cmd, operator_dir.string());
  }
  for (PlaneDirection dir : {PlaneDirection::Coronal, PlaneDirection::Sagittal}) {
    const char* name = dir == PlaneDirection::Coronal ? "deconv-coronal" : "deconv-sagittal";
    Volume3D v = stage(name, [&] {
      std::vector<Volume3D> stacks;
      for (ArcKind a : cfg.arcs) stacks.push_back(out.dbp.stack(dir, a));
      return deconvolve_direction(stacks, cfg.arcs, &out.dbp.valid, &out.dbp.support, geom, dir, *op);
    });
    save(v, to_string(dir));
    (dir == PlaneDirection::Coronal ? out.coronal : out.sagittal) = std::move(v);
  }
  out.blended = stage("blend", [&] { return blend_volume(out.coronal, out.sagittal, cfg.transition_deg); });
  save(out.blended, "blended");
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  stage("config", [&] {
    cfg.validate();
    return 0;
  });
  set_worker_count(cfg.workers);
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  write_text(dir / "config.ini", format_pipeline_config(cfg));
  const GridShape grid = cfg.grid();
  const Volume3D truth = stage("phantom", [&] { return make_phantom(cfg.phantom, grid); });
  write_volume(truth, dir / "phantom");
  const ProjectionSet clean = simulate(cfg, truth);
  write_projections(clean, dir / "projections");
  ProjectionSet proj = clean;
  PipelineResult res;
  if (cfg.noise_enabled) {
    proj = stage("noise", [&] { return add_poisson_noise(clean, cfg.noise, 0); });
    write_projections(proj, dir / "projections_noisy");
    res.snr_db = measure_snr(clean, proj);
  }
  const double half_angle = cfg.geometry.half_cone_angle();
  const ReconstructionSet rec = reconstruct_all(cfg, proj, half_angle, dir / "operator", &dir);

  res.slab = covered_slab(cfg.geometry, grid, half_angle, phantom_radius(cfg.phantom, grid));
  stage("metrics", [&] {
    res.fdk = evaluate(rec.fdk, truth, res.slab.first, res.slab.second);
    res.coronal = evaluate(rec.coronal, truth, res.slab.first, res.slab.second);
    res.sagittal = evaluate(rec.sagittal, truth, res.slab.first, res.slab.second);
    res.blended = evaluate(rec.blended, truth, res.slab.first, res.slab.second);
    return 0;
  });
  write_text(dir / "report.json", pipeline_report_json(res));
  std::ostringstream txt;
  txt << "[fdk]\n" << format_report(res.fdk, false) << "\n[coronal]\n" << format_report(res.coronal, false)
      << "\n[sagittal]\n" << format_report(res.sagittal, false) << "\n[blended]\n" << format_report(res.blended, false);
  if (res.snr_db) txt << "\nsnr_db = " << format_double(*res.snr_db) << "\n";
  write_text(dir / "report.txt", txt.str());
  return res;
}

std::vector<SweepRow> run_cone_angle_sweep(const PipelineConfig& cfg, const std::vector<double>& angles_deg) {
  PipelineConfig c = cfg;
  c.sweep_angles_deg = angles_deg;
  stage("config", [&] {
    c.validate();
    require(!angles_deg.empty(), ErrorKind::Config, "cone-angle sweep needs at least one angle");
    return 0;
  });
  set_worker_count(c.workers);
  const GridShape grid = c.grid();
  const Volume3D truth = stage("phantom", [&] { return make_phantom(c.phantom, grid); });
  ProjectionSet proj = simulate(c, truth);
  if (c.noise_enabled) proj = stage("noise", [&] { return add_poisson_noise(proj, c.noise, 0); });
  std::vector<SweepRow> rows;
  for (double deg : angles_deg) {
    const double a = degrees_to_radians(deg);
    const ReconstructionSet rec = reconstruct_all(c, proj, a, c.output_dir / "operator", nullptr);
    SweepRow row;
    row.parameter = deg;
    row.slab = covered_slab(c.geometry, grid, a, phantom_radius(c.phantom, grid));
    stage("metrics", [&] {
      row.fdk = evaluate(rec.fdk, truth, row.slab.first, row.slab.second, false);
      row.pipeline = evaluate(rec.blended, truth, row.slab.first, row.slab.second, false);
      return 0;
    });
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> run_noise_sweep(const PipelineConfig& cfg, const std::vector<double>& i0_list) {
  PipelineConfig c = cfg;
  c.sweep_i0 = i0_list;
  stage("config", [&] {
    c.validate();
    require(!i0_list.empty(), ErrorKind::Config, "noise sweep needs at least one intensity");
    return 0;
  });
  set_worker_count(c.workers);
  const GridShape grid = c.grid();
  const Volume3D truth = stage("phantom", [&] { return make_phantom(c.phantom, grid); });
  const ProjectionSet clean = simulate(c, truth);
  const double half_angle = c.geometry.half_cone_angle();
  const std::pair<int, int> slab = covered_slab(c.geometry, grid, half_angle, phantom_radius(c.phantom, grid));
  std::vector<SweepRow> rows;
  for (double i0 : i0_list) {
    NoiseSpec spec = c.noise;
    spec.i0 = i0;
    spec.realizations = c.sweep_realizations;
    std::vector<MetricReport> fdk, pipe;
    double snr = 0.0;
    for (int r = 0; r < spec.realizations; ++r) {
      const ProjectionSet noisy = stage("noise", [&] { return add_poisson_noise(clean, spec, r); });
      snr += measure_snr(clean, noisy) / spec.realizations;
      const ReconstructionSet rec = reconstruct_all(c, noisy, half_angle, c.output_dir / "operator", nullptr);
      stage("metrics", [&] {
        fdk.push_back(evaluate(rec.fdk, truth, slab.first, slab.second, false));
        pipe.push_back(evaluate(rec.blended, truth, slab.first, slab.second, false));
        return 0;
      });
    }
    SweepRow row;
    row.parameter = i0;
    row.snr_db = snr;
    row.fdk = mean_report(fdk);
    row.pipeline = mean_report(pipe);
    row.realizations = spec.realizations;
    row.slab = slab;
    rows.push_back(row);
  }
  return rows;
}

std::string format_sweep_table(const std::vector<SweepRow>& rows, const std::string& parameter_name) {
  std::ostringstream os;
  os << parameter_name << ",snr_db,fdk_nmse,fdk_psnr_db,fdk_ssim,pipeline_nmse,pipeline_psnr_db,pipeline_ssim,realizations\n";
  for (const SweepRow& r : rows) {
    os << format_double(r.parameter) << "," << (r.snr_db ? format_double(*r.snr_db) : std::string("")) << ","
       << format_double(r.fdk.nmse) << "," << format_double(r.fdk.psnr_db) << "," << format_double(r.fdk.ssim) << ","
       << format_double(r.pipeline.nmse) << "," << format_double(r.pipeline.psnr_db) << ","
       << format_double(r.pipeline.ssim) << "," << r.realizations << "\n";
  }
  return os.str();
}

std::string pipeline_report_json(const PipelineResult& r) {
  ordered_json j;
  j["fdk"] = report_json(r.fdk);
  j["coronal"] = report_json(r.coronal);
  j["sagittal"] = report_json(r.sagittal);
  j["blended"] = report_json(r.blended);
  j["snr_db"] = r.snr_db ? number(*r.snr_db) : ordered_json(nullptr);
  j["slab"] = {r.slab.first, r.slab.second};
  return j.dump(2) + "\n";
}

std::string sweep_report_json(const std::vector<SweepRow>& rows, const std::string& parameter_name) {
  ordered_json arr = ordered_json::array();
  for (const SweepRow& r : rows) {
    ordered_json j;
    j[parameter_name] = r.parameter;
    j["snr_db"] = r.snr_db ? number(*r.snr_db) : ordered_json(nullptr);
    j["realizations"] = r.realizations;
    j["slab"] = {r.slab.first, r.slab.second};
    j["fdk"] = report_json(r.fdk);
    j["pipeline"] = report_json(r.pipeline);
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

}  // namespace cbct
