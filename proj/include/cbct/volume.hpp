#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "cbct/vec3.hpp"

namespace cbct {

/// Voxel lattice description. Voxel (i,j,k) has its center at
/// origin + (i*spacing.x, j*spacing.y, k*spacing.z), all in mm.
struct GridShape {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{};

  /// Grid whose center coincides with the isocenter.
  static GridShape centered(int nx, int ny, int nz, Vec3 spacing);
  static GridShape centered(int n, double spacing) { return centered(n, n, n, {spacing, spacing, spacing}); }

  std::size_t voxel_count() const { return static_cast<std::size_t>(nx) * ny * nz; }
  Vec3 voxel_center(int i, int j, int k) const {
    return {origin.x + i * spacing.x, origin.y + j * spacing.y, origin.z + k * spacing.z};
  }
  double x(int i) const { return origin.x + i * spacing.x; }
  double y(int j) const { return origin.y + j * spacing.y; }
  double z(int k) const { return origin.z + k * spacing.z; }
  void validate() const;
  bool operator==(const GridShape&) const = default;
};

/// Regular voxel grid of attenuation values, x fastest, then y, then z.
class Volume3D {
 public:
  Volume3D() = default;
  explicit Volume3D(const GridShape& shape, double fill = 0.0);
  Volume3D(const GridShape& shape, std::vector<double> data);

  const GridShape& shape() const { return shape_; }
  int nx() const { return shape_.nx; }
  int ny() const { return shape_.ny; }
  int nz() const { return shape_.nz; }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * shape_.ny + j) * shape_.nx + i;
  }
  double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  /// Throws a config error if any voxel is NaN or infinite.
  void validate() const;

 private:
  GridShape shape_;
  std::vector<double> data_;
};

/// Per-view 2-D detector arrays. Sample (view, v, u) sits at index
/// (view * nv + v) * nu + u; detector cell centers are at
/// u = (iu - (nu-1)/2) * pitch and v = (iv - (nv-1)/2) * pitch.
class ProjectionSet {
 public:
  ProjectionSet() = default;
  ProjectionSet(int nu, int nv, double pitch, std::vector<double> lambdas);

  int nu() const { return nu_; }
  int nv() const { return nv_; }
  double pitch() const { return pitch_; }
  int n_views() const { return static_cast<int>(lambdas_.size()); }
  const std::vector<double>& lambdas() const { return lambdas_; }

  std::size_t view_size() const { return static_cast<std::size_t>(nu_) * nv_; }
  std::span<double> view(int j) { return {data_.data() + j * view_size(), view_size()}; }
  std::span<const double> view(int j) const { return {data_.data() + j * view_size(), view_size()}; }
  double& at(int view, int v, int u) { return data_[view * view_size() + static_cast<std::size_t>(v) * nu_ + u]; }
  double at(int view, int v, int u) const { return data_[view * view_size() + static_cast<std::size_t>(v) * nu_ + u]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool same_layout(const ProjectionSet& o) const {
    return nu_ == o.nu_ && nv_ == o.nv_ && pitch_ == o.pitch_ && lambdas_ == o.lambdas_;
  }
  /// Checks shape, angle ordering and finiteness.
  void validate() const;

 private:
  int nu_ = 0;
  int nv_ = 0;
  double pitch_ = 1.0;
  std::vector<double> lambdas_;
  std::vector<double> data_;
};

struct SliceImage {
  int rows = 0;
  int cols = 0;
  double row_spacing = 1.0;
  double col_spacing = 1.0;
  std::vector<double> data;  // row-major

  double operator()(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
  double& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
};

enum class SliceAxis { Axial, Coronal, Sagittal };

SliceAxis parse_slice_axis(std::string_view name);

/// Copies one slice out of the volume.
///   axial    (fixed k): rows = y index, cols = x index
///   coronal  (fixed j): rows = z index, cols = x index
///   sagittal (fixed i): rows = z index, cols = y index
SliceImage extract_slice(const Volume3D& vol, SliceAxis axis, int index);

/// Inverse of extract_slice for axial slices.
void insert_axial_slice(Volume3D& vol, int k, const SliceImage& slice);

}  // namespace cbct
