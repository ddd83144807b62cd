#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cbct/config.hpp"
#include "cbct/dbp.hpp"
#include "cbct/metrics.hpp"

namespace cbct {

Volume3D make_phantom(const PhantomConfig& cfg, const GridShape& grid);

/// Largest distance of the phantom's support from the z axis (mm).
double phantom_radius(const PhantomConfig& cfg, const GridShape& grid);

/// Axial slices [begin, end) lying in |z| <= tan(half_angle) (R - r_obj), the
/// slab every view sees when the object fits inside radius r_obj.
std::pair<int, int> covered_slab(const ScanGeometry& geom, const GridShape& grid, double half_angle, double r_obj);

struct PipelineResult {
  MetricReport fdk;
  MetricReport coronal;
  MetricReport sagittal;
  MetricReport blended;
  std::optional<double> snr_db;
  std::pair<int, int> slab{0, 0};
};

/// Reconstructions of one data set by FDK and by DBP, per-plane inversion and
/// spectral blending, scored against the truth on the covered slab.
struct ReconstructionSet {
  Volume3D fdk;
  DbpVolumes dbp;
  Volume3D coronal;
  Volume3D sagittal;
  Volume3D blended;
};

/// Runs every stage on already simulated projections; `half_angle` crops the
/// detector rows first. Throws errors tagged with the failing stage name.
/// When `artifact_dir` is set, each stage's output is written there as soon as
/// it exists, so a failure leaves the earlier artifacts on disk.
ReconstructionSet reconstruct_all(const PipelineConfig& cfg, const ProjectionSet& proj, double half_angle,
                                  const std::filesystem::path& operator_dir,
                                  const std::filesystem::path* artifact_dir = nullptr);

/// Phantom, projection, optional noise, both reconstructions, blending and
/// metrics. Every intermediate is written under cfg.output_dir.
PipelineResult run_pipeline(const PipelineConfig& cfg);

struct SweepRow {
  double parameter = 0.0;  // half cone angle in degrees, or I0
  std::optional<double> snr_db;
  MetricReport fdk;
  MetricReport pipeline;
  int realizations = 1;
  std::pair<int, int> slab{0, 0};
};

std::vector<SweepRow> run_cone_angle_sweep(const PipelineConfig& cfg, const std::vector<double>& angles_deg);
std::vector<SweepRow> run_noise_sweep(const PipelineConfig& cfg, const std::vector<double>& i0_list);

std::string format_sweep_table(const std::vector<SweepRow>& rows, const std::string& parameter_name);
std::string pipeline_report_json(const PipelineResult& r);
std::string sweep_report_json(const std::vector<SweepRow>& rows, const std::string& parameter_name);

}  // namespace cbct
