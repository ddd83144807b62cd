#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cbct/deconv.hpp"
#include "cbct/fdk.hpp"
#include "cbct/geometry.hpp"
#include "cbct/phantoms.hpp"
#include "cbct/projector.hpp"

namespace cbct {

enum class PhantomKind { Disks, Sphere, Zero };

struct PhantomConfig {
  PhantomKind kind = PhantomKind::Disks;
  DiskPhantomSpec disks = DiskPhantomSpec::table('d');
  double sphere_radius = 60.0;
  double sphere_value = 1.0;
};

/// Everything one pipeline run needs. Loaded from flat INI sections:
/// [geometry] [volume] [phantom] [arcs] [fdk] [deconv] [blend] [noise]
/// [sweep] [output] [run]. Unknown keys are rejected.
struct PipelineConfig {
  std::string preset = "desk";
  ScanGeometry geometry = geometry_preset("desk");
  int volume_n = 128;
  double voxel_mm = 2.0;
  PhantomConfig phantom;
  std::vector<ArcKind> arcs{ArcKind::Short, ArcKind::Complement};
  FdkConfig fdk;
  DeconvConfig deconv;
  std::string operator_cmd;  // external per-plane operator, empty for the built-in solver
  double support_threshold = 3e-2;  // fraction of the largest projection value
  double transition_deg = 10.0;
  bool noise_enabled = false;
  NoiseSpec noise;
  std::vector<double> sweep_angles_deg;
  std::vector<double> sweep_i0;
  int sweep_realizations = 5;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;
  int workers = 1;

  GridShape grid() const { return GridShape::centered(volume_n, voxel_mm); }
  /// Validates every module-level invariant before any compute starts.
  void validate() const;
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);
/// Same as load_pipeline_config but from INI text.
PipelineConfig parse_pipeline_config(const std::string& text);
/// Canonical INI text; parse_pipeline_config(format_pipeline_config(c)) == c.
std::string format_pipeline_config(const PipelineConfig& cfg);

}  // namespace cbct
