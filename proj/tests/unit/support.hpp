#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cbct/geometry.hpp"
#include "cbct/volume.hpp"

namespace testing {

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline cbct::Volume3D random_volume(const cbct::GridShape& g, std::uint64_t seed) {
  return cbct::Volume3D(g, random_vector(g.voxel_count(), seed));
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

inline double rel_l2(const std::vector<double>& a, const std::vector<double>& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - ref[i]) * (a[i] - ref[i]);
    den += ref[i] * ref[i];
  }
  return std::sqrt(num / den);
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("cbct_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Small scanner that keeps unit tests fast: 64 x 64 detector at 4 mm.
inline cbct::ScanGeometry small_geometry(int views) {
  cbct::ScanGeometry g;
  g.source_radius = 500.0;
  g.source_detector = 1000.0;
  g.nu = 64;
  g.nv = 64;
  g.pitch = 4.0;
  g.n_views = views;
  return g;
}

}  // namespace testing
