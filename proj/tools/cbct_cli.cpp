// Command-line front end: one subcommand per processing stage, plus the
// end-to-end pipeline and the two parameter sweeps.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include "cbct/blend.hpp"
#include "cbct/config.hpp"
#include "cbct/dbp.hpp"
#include "cbct/deconv.hpp"
#include "cbct/error.hpp"
#include "cbct/fdk.hpp"
#include "cbct/io.hpp"
#include "cbct/mbir.hpp"
#include "cbct/metrics.hpp"
#include "cbct/parallel.hpp"
#include "cbct/phantoms.hpp"
#include "cbct/pipeline.hpp"
#include "cbct/projector.hpp"

namespace fs = std::filesystem;
using namespace cbct;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
};

// Settings shared by subcommands that need a geometry and a voxel grid.
struct GridOptions {
  std::string preset;
  std::optional<int> n;
  std::optional<double> spacing;
  std::optional<int> views;
};

void add_grid_options(CLI::App* app, GridOptions& g, bool with_grid) {
  app->add_option("--preset", g.preset, "Geometry preset (aapm-sim, head-real, desk, mini)");
  app->add_option("--views", g.views, "Number of views over the full turn");
  if (with_grid) {
    app->add_option("--n", g.n, "Voxels per axis");
    app->add_option("--spacing", g.spacing, "Voxel size in mm");
  }
}

PipelineConfig resolve(const Globals& gl, const GridOptions* g = nullptr) {
  PipelineConfig c = gl.config.empty() ? PipelineConfig{} : load_pipeline_config(gl.config);
  if (g) {
    if (!g->preset.empty()) {
      c.preset = g->preset;
      c.geometry = geometry_preset(g->preset);
    }
    if (g->views) c.geometry.n_views = *g->views;
    if (g->n) c.volume_n = *g->n;
    if (g->spacing) c.voxel_mm = *g->spacing;
  }
  if (gl.seed) c.seed = *gl.seed;
  c.noise.seed = c.seed;
  if (gl.workers) c.workers = *gl.workers;
  if (!gl.out.empty()) c.output_dir = gl.out;
  set_worker_count(c.workers);
  return c;
}

fs::path output_path(const Globals& gl, const std::string& explicit_path, const std::string& default_name) {
  if (!explicit_path.empty()) return explicit_path;
  const fs::path dir = gl.out.empty() ? fs::path("out") : fs::path(gl.out);
  fs::create_directories(dir);
  return dir / default_name;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cone-beam CT reconstruction toolkit"};
  app.require_subcommand(1);
  Globals gl;
  app.add_option("--config", gl.config, "INI experiment file")->check(CLI::ExistingFile);
  app.add_option("--seed", gl.seed, "Noise seed");
  app.add_option("--workers", gl.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", gl.out, "Output directory");

  // phantom
  GridOptions ph_grid;
  std::string ph_type = "disks", ph_table = "d", ph_output;
  double ph_radius = 60.0;
  auto* ph = app.add_subcommand("phantom", "Voxelize a disk-stack or sphere phantom");
  add_grid_options(ph, ph_grid, true);
  ph->add_option("--type", ph_type, "disks, sphere or zero")->check(CLI::IsMember({"disks", "sphere", "zero"}));
  ph->add_option("--table", ph_table, "Disk table column a-d")->check(CLI::IsMember({"a", "b", "c", "d"}));
  ph->add_option("--sphere-radius", ph_radius, "Sphere radius in mm");
  ph->add_option("--output", ph_output, "Output stem");

  // project
  GridOptions pr_grid;
  std::string pr_volume, pr_output, pr_arc = "full", pr_direction = "coronal";
  double pr_offset = 0.0;
  std::optional<double> pr_i0;
  auto* pr = app.add_subcommand("project", "Forward-project a volume, optionally adding Poisson noise");
  add_grid_options(pr, pr_grid, false);
  pr->add_option("--volume", pr_volume, "Input volume stem")->required();
  pr->add_option("--arc", pr_arc, "full, short or complement")->check(CLI::IsMember({"full", "short", "complement"}));
  pr->add_option("--direction", pr_direction, "Plane direction that defines a partial arc");
  pr->add_option("--offset", pr_offset, "Plane offset in mm that defines a partial arc");
  pr->add_option("--i0", pr_i0, "Unattenuated photon count; omit for noiseless data");
  pr->add_option("--output", pr_output, "Output stem");

  // fdk
  GridOptions fd_grid;
  std::string fd_proj, fd_output, fd_filter = "ram-lak";
  double fd_cutoff = 1.0;
  auto* fd = app.add_subcommand("fdk", "FDK reconstruction of a full scan");
  add_grid_options(fd, fd_grid, true);
  fd->add_option("--projections", fd_proj, "Projection stem")->required();
  fd->add_option("--filter", fd_filter, "ram-lak or shepp-logan");
  fd->add_option("--cutoff", fd_cutoff, "Filter cutoff as a fraction of Nyquist");
  fd->add_option("--output", fd_output, "Output stem");

  // dbp
  GridOptions db_grid;
  std::string db_proj, db_output, db_direction = "coronal", db_arc = "short";
  std::vector<int> db_range;
  auto* db = app.add_subcommand("dbp", "Differentiated backprojection onto planes of interest");
  add_grid_options(db, db_grid, true);
  db->add_option("--projections", db_proj, "Projection stem")->required();
  db->add_option("--direction", db_direction, "coronal or sagittal")->check(CLI::IsMember({"coronal", "sagittal"}));
  db->add_option("--arc", db_arc, "short, complement or full")->check(CLI::IsMember({"short", "complement", "full"}));
  db->add_option("--planes", db_range, "First and last plane index (inclusive)")->expected(2);
  db->add_option("--output", db_output, "Output stem");

  // deconv
  GridOptions dc_grid;
  std::vector<std::string> dc_inputs;
  std::string dc_valid, dc_support, dc_output, dc_reg, dc_operator;
  std::optional<double> dc_weight, dc_tol;
  std::optional<int> dc_iter;
  auto* dc = app.add_subcommand("deconv", "Invert DBP stacks plane by plane");
  add_grid_options(dc, dc_grid, false);
  dc->add_option("--dbp", dc_inputs, "One or two DBP stack stems of the same direction")->required();
  dc->add_option("--valid", dc_valid, "Measurement validity volume");
  dc->add_option("--support", dc_support, "Object support volume");
  dc->add_option("--regularizer", dc_reg, "tikhonov or tv");
  dc->add_option("--reg-weight", dc_weight, "Weight relative to |A^T A|");
  dc->add_option("--max-iter", dc_iter, "Iteration limit");
  dc->add_option("--cg-tol", dc_tol, "Relative residual tolerance");
  dc->add_option("--operator-cmd", dc_operator, "External per-plane operator command");
  dc->add_option("--output", dc_output, "Output stem");

  // blend
  std::string bl_cor, bl_sag, bl_output;
  double bl_td = 10.0;
  auto* bl = app.add_subcommand("blend", "Fourier-domain fusion of coronal and sagittal volumes");
  bl->add_option("--coronal", bl_cor, "Coronal volume stem")->required();
  bl->add_option("--sagittal", bl_sag, "Sagittal volume stem")->required();
  bl->add_option("--transition-deg", bl_td, "Half-width of the angular transition band");
  bl->add_option("--output", bl_output, "Output stem");

  // mbir
  GridOptions mb_grid;
  std::string mb_proj, mb_output, mb_rule = "backtracking";
  std::optional<double> mb_lambda;
  int mb_iter = 50;
  double mb_step0 = 0.0;
  auto* mb = app.add_subcommand("mbir", "TV-penalized least-squares reconstruction");
  add_grid_options(mb, mb_grid, true);
  mb->add_option("--projections", mb_proj, "Projection stem")->required();
  mb->add_option("--lambda", mb_lambda, "TV weight (default 1e-2 max|A^T y|)");
  mb->add_option("--iterations", mb_iter, "Outer iterations");
  mb->add_option("--step-rule", mb_rule, "fixed or backtracking");
  mb->add_option("--step0", mb_step0, "Initial step (0: from the operator norm)");
  mb->add_option("--output", mb_output, "Output stem");

  // metrics
  std::string me_recon, me_truth, me_csv;
  bool me_standard = false;
  auto* me = app.add_subcommand("metrics", "NMSE, PSNR and SSIM of a reconstruction");
  me->add_option("--recon", me_recon, "Reconstruction stem")->required();
  me->add_option("--truth", me_truth, "Reference stem")->required();
  me->add_flag("--standard-psnr", me_standard, "Also print the conventional PSNR first");
  me->add_option("--csv", me_csv, "Per-slice CSV output path");

  auto* pl = app.add_subcommand("pipeline", "Run the full experiment described by --config");

  std::vector<double> sa_angles;
  auto* sa = app.add_subcommand("sweep-angle", "Repeat the pipeline for several cropped cone angles");
  sa->add_option("--angles", sa_angles, "Half cone angles in degrees");

  std::vector<double> sn_i0;
  std::optional<int> sn_real;
  auto* sn = app.add_subcommand("sweep-noise", "Repeat the pipeline for several photon counts");
  sn->add_option("--i0", sn_i0, "Unattenuated photon counts");
  sn->add_option("--realizations", sn_real, "Noise realizations per level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*ph) {
      PipelineConfig c = resolve(gl, &ph_grid);
      c.phantom.kind = ph_type == "disks" ? PhantomKind::Disks : ph_type == "sphere" ? PhantomKind::Sphere : PhantomKind::Zero;
      c.phantom.disks = DiskPhantomSpec::table(ph_table[0]);
      c.phantom.sphere_radius = ph_radius;
      const Volume3D v = make_phantom(c.phantom, c.grid());
      const fs::path p = output_path(gl, ph_output, "phantom");
      write_volume(v, p);
      std::cout << "wrote " << p.string() << "\n";
    } else if (*pr) {
      PipelineConfig c = resolve(gl, &pr_grid);
      const Volume3D v = read_volume(pr_volume);
      ArcSpec arc = ArcSpec::full();
      if (pr_arc != "full") {
        const PlaneOfInterest p = plane_of_interest(c.geometry, parse_direction(pr_direction), pr_offset);
        arc = pr_arc == "short" ? short_arc(p) : complement_arc(p);
      }
      ProjectionSet proj = forward_project(v, c.geometry, arc);
      Metadata meta;
      if (pr_i0) {
        NoiseSpec ns{*pr_i0, c.seed, 1};
        ns.validate();
        const ProjectionSet noisy = add_poisson_noise(proj, ns, 0);
        meta.set("i0", *pr_i0);
        meta.set("seed", std::to_string(c.seed));
        meta.set("snr_db", measure_snr(proj, noisy));
        proj = noisy;
      }
      const fs::path p = output_path(gl, pr_output, "projections");
      write_projections(proj, p, meta);
      std::cout << "wrote " << p.string() << "\n";
    } else if (*fd) {
      PipelineConfig c = resolve(gl, &fd_grid);
      FdkConfig f = c.fdk;
      f.filter = parse_ramp_window(fd_filter);
      f.cutoff = fd_cutoff;
      const Volume3D v = fdk_reconstruct(read_projections(fd_proj), c.geometry, f, c.grid());
      const fs::path p = output_path(gl, fd_output, "fdk");
      write_volume(v, p);
      std::cout << "wrote " << p.string() << "\n";
    } else if (*db) {
      PipelineConfig c = resolve(gl, &db_grid);
      const ProjectionSet proj = read_projections(db_proj);
      const PlaneDirection dir = parse_direction(db_direction);
      const ArcKind kind = parse_arc_kind(db_arc);
      const GridShape grid = c.grid();
      Volume3D stack(grid);
      if (db_range.empty()) {
        stack = compute_dbp_volumes(proj, c.geometry, grid).stack(dir, kind);
      } else {
        require(db_range[0] >= 0 && db_range[0] <= db_range[1] && db_range[1] < plane_count(grid, dir), ErrorKind::Bounds,
                "plane range out of bounds");
        for (int i = db_range[0]; i <= db_range[1]; ++i) {
          const PlaneOfInterest p = plane_of_interest(c.geometry, dir, plane_offset(grid, dir, i));
          const ArcSpec arc = kind == ArcKind::Short ? short_arc(p) : kind == ArcKind::Complement ? complement_arc(p)
                                                                                                 : ArcSpec::full();
          const DbpPlane d = compute_dbp(proj, c.geometry, p, arc, plane_grid(p, grid));
          for (int k = 0; k < grid.nz; ++k)
            for (int t = 0; t < d.grid.nt; ++t)
              (dir == PlaneDirection::Coronal ? stack(t, i, k) : stack(i, t, k)) = d.at(t, k);
        }
      }
      Metadata meta;
      meta.set("kind", std::string("dbp"));
      meta.set("direction", std::string(to_string(dir)));
      meta.set("arc", std::string(to_string(kind)));
      const fs::path p = output_path(gl, db_output, std::string("dbp_") + to_string(dir) + "_" + to_string(kind));
      write_volume(stack, p, meta);
      std::cout << "wrote " << p.string() << "\n";
    } else if (*dc) {
      PipelineConfig c = resolve(gl, &dc_grid);
      require(dc_inputs.size() <= 2, ErrorKind::Config, "deconv takes one or two DBP stacks");
      std::vector<Volume3D> stacks;
      std::vector<ArcKind> arcs;
      std::optional<PlaneDirection> dir;
      for (const std::string& in : dc_inputs) {
        auto [v, meta] = read_volume_with_metadata(in);
        require(meta.has("direction") && meta.has("arc"), ErrorKind::Format, in + " is not a DBP stack");
        const PlaneDirection d = parse_direction(meta.get("direction"));
        require(!dir || *dir == d, ErrorKind::Config, "DBP stacks mix plane directions");
        dir = d;
        arcs.push_back(parse_arc_kind(meta.get("arc")));
        stacks.push_back(std::move(v));
      }
      DeconvConfig cfg = c.deconv;
      if (!dc_reg.empty()) cfg.regularizer = parse_regularizer(dc_reg);
      if (dc_weight) cfg.reg_weight = *dc_weight;
      if (dc_iter) cfg.max_iter = *dc_iter;
      if (dc_tol) cfg.cg_tol = *dc_tol;
      const std::string opcmd = dc_operator.empty() ? c.operator_cmd : dc_operator;
      std::unique_ptr<DeconvOperator> op;
      if (opcmd.empty()) op = std::make_unique<RegularizedInversion>(cfg);
      else op = std::make_unique<ExternalOperator>(opcmd, (fs::path(gl.out.empty() ? "out" : gl.out) / "operator").string());
      std::optional<Volume3D> valid;
      if (!dc_valid.empty()) valid = read_volume(dc_valid);
      std::optional<Volume3D> support;
      if (!dc_support.empty()) support = read_volume(dc_support);
      const Volume3D v = deconvolve_direction(stacks, arcs, valid ? &*valid : nullptr, support ? &*support : nullptr,
                                              c.geometry, *dir, *op);
      const fs::path p = output_path(gl, dc_output, to_string(*dir));
      write_volume(v, p);
      std::cout << "wrote " << p.string() << "\n";
    } else if (*bl) {
      resolve(gl);
      const Volume3D v = blend_volume(read_volume(bl_cor), read_volume(bl_sag), bl_td);
      const fs::path p = output_path(gl, bl_output, "blended");
      write_volume(v, p);
      std::cout << "wrote " << p.string() << "\n";
    } else if (*mb) {
      PipelineConfig c = resolve(gl, &mb_grid);
      const ProjectionSet y = read_projections(mb_proj);
      MbirConfig m;
      m.lambda_tv = mb_lambda ? *mb_lambda : default_lambda_tv(y, c.geometry, c.grid());
      m.n_iter = mb_iter;
      m.step_rule = parse_step_rule(mb_rule);
      m.step0 = mb_step0;
      const MbirResult r = mbir_reconstruct(y, c.geometry, m, Volume3D(c.grid()));
      const fs::path p = output_path(gl, mb_output, "mbir");
      write_volume(r.f, p);
      std::cout << "wrote " << p.string() << "\nlambda_tv = " << format_double(m.lambda_tv)
                << "\nfinal_objective = " << format_double(r.objective.back()) << "\n";
    } else if (*me) {
      resolve(gl);
      const Volume3D recon = read_volume(me_recon), truth = read_volume(me_truth);
      const MetricReport r = evaluate(recon, truth);
      if (me_standard) std::cout << "standard_psnr_db = " << format_double(r.psnr_standard_db) << "\n";
      std::cout << format_report(r, false);
      if (!me_csv.empty()) {
        std::string csv = format_report(r, true);
        csv = csv.substr(csv.find("z_mm"));
        write_file(me_csv, csv);
      }
    } else if (*pl) {
      const PipelineConfig c = resolve(gl);
      const PipelineResult r = run_pipeline(c);
      std::cout << "fdk_nmse = " << format_double(r.fdk.nmse) << "\ncoronal_nmse = " << format_double(r.coronal.nmse)
                << "\nsagittal_nmse = " << format_double(r.sagittal.nmse)
                << "\nblended_nmse = " << format_double(r.blended.nmse) << "\nreport = "
                << (c.output_dir / "report.json").string() << "\n";
    } else if (*sa) {
      const PipelineConfig c = resolve(gl);
      const std::vector<double> angles = sa_angles.empty() ? c.sweep_angles_deg : sa_angles;
      const auto rows = run_cone_angle_sweep(c, angles);
      fs::create_directories(c.output_dir);
      write_file(c.output_dir / "sweep_angle.csv", format_sweep_table(rows, "half_cone_deg"));
      write_file(c.output_dir / "sweep_angle.json", sweep_report_json(rows, "half_cone_deg"));
      std::cout << format_sweep_table(rows, "half_cone_deg");
    } else if (*sn) {
      PipelineConfig c = resolve(gl);
      if (sn_real) c.sweep_realizations = *sn_real;
      const std::vector<double> levels = sn_i0.empty() ? c.sweep_i0 : sn_i0;
      const auto rows = run_noise_sweep(c, levels);
      fs::create_directories(c.output_dir);
      write_file(c.output_dir / "sweep_noise.csv", format_sweep_table(rows, "i0"));
      write_file(c.output_dir / "sweep_noise.json", sweep_report_json(rows, "i0"));
      std::cout << format_sweep_table(rows, "i0");
    }
  } catch (const SolverError& e) {
    std::cerr << "error (solver): " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return e.kind() == ErrorKind::UndefinedReference || e.kind() == ErrorKind::Solver ? kExitNumeric : kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
