#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cbct/volume.hpp"

namespace cbct {

/// Ordered key=value sidecar contents.
class Metadata {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  void set(const std::string& key, int value);
  void set(const std::string& key, const std::vector<double>& values);

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::vector<double> get_list(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

/// Maps "<name>", "<name>.raw" or "<name>.meta" to the common stem.
std::filesystem::path file_stem(const std::filesystem::path& path);

Metadata read_metadata(const std::filesystem::path& meta_path);
/// Writes to a temporary file and renames it into place.
void write_metadata_atomic(const std::filesystem::path& meta_path, const Metadata& meta);

/// Volume file pair: <name>.raw holds float32 little-endian voxels in x-fastest
/// order; <name>.meta holds nx, ny, nz, sx, sy, sz, ox, oy, oz plus any extra keys.
void write_volume(const Volume3D& vol, const std::filesystem::path& path, const Metadata& extra = {});
Volume3D read_volume(const std::filesystem::path& path);
std::pair<Volume3D, Metadata> read_volume_with_metadata(const std::filesystem::path& path);

/// Projection file pair: float32 payload in (view, v, u) order and a sidecar
/// with nu, nv, nviews, pitch and a comma-separated lambdas list (radians).
void write_projections(const ProjectionSet& proj, const std::filesystem::path& path, const Metadata& extra = {});
ProjectionSet read_projections(const std::filesystem::path& path);

/// 2-D image file pair (rows, cols, row_spacing, col_spacing), row-major float32.
void write_image(const SliceImage& img, const std::filesystem::path& path, const Metadata& extra = {});
SliceImage read_image(const std::filesystem::path& path);

struct DisplayWindow {
  double level_hu = 0.0;
  double width_hu = 2000.0;
  double hu_at_zero = -1000.0;  // attenuation 0 maps to air
  double hu_at_one = 5108.0;    // attenuation 1 maps to the phantom's bright value
};

/// 16-bit binary PGM of the slice after HU mapping and window/level.
void write_pgm16(const SliceImage& img, const std::filesystem::path& path, const DisplayWindow& window);

}  // namespace cbct
