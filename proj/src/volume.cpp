#include "cbct/volume.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cbct/error.hpp"

namespace cbct {

GridShape GridShape::centered(int nx, int ny, int nz, Vec3 spacing) {
  GridShape g;
  g.nx = nx;
  g.ny = ny;
  g.nz = nz;
  g.spacing = spacing;
  g.origin = {-0.5 * (nx - 1) * spacing.x, -0.5 * (ny - 1) * spacing.y, -0.5 * (nz - 1) * spacing.z};
  return g;
}

void GridShape::validate() const {
  require(nx > 0 && ny > 0 && nz > 0, ErrorKind::Config, "grid dimensions must be positive");
  require(spacing.x > 0 && spacing.y > 0 && spacing.z > 0, ErrorKind::Config, "voxel spacing must be positive");
  require(std::isfinite(origin.x) && std::isfinite(origin.y) && std::isfinite(origin.z), ErrorKind::Config,
          "grid origin must be finite");
}

Volume3D::Volume3D(const GridShape& shape, double fill) : shape_(shape) {
  shape_.validate();
  data_.assign(shape_.voxel_count(), fill);
}

Volume3D::Volume3D(const GridShape& shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  shape_.validate();
  require(data_.size() == shape_.voxel_count(), ErrorKind::Config,
          "volume data length " + std::to_string(data_.size()) + " does not match grid " +
              std::to_string(shape_.voxel_count()));
}

void Volume3D::validate() const {
  shape_.validate();
  require(data_.size() == shape_.voxel_count(), ErrorKind::Config, "volume data length mismatch");
  for (double v : data_) require(std::isfinite(v), ErrorKind::Config, "volume contains non-finite values");
}

ProjectionSet::ProjectionSet(int nu, int nv, double pitch, std::vector<double> lambdas)
    : nu_(nu), nv_(nv), pitch_(pitch), lambdas_(std::move(lambdas)) {
  require(nu > 0 && nv > 0, ErrorKind::Config, "detector dimensions must be positive");
  require(pitch > 0, ErrorKind::Config, "detector pitch must be positive");
  require(!lambdas_.empty(), ErrorKind::Config, "projection set needs at least one view");
  data_.assign(view_size() * lambdas_.size(), 0.0);
}

void ProjectionSet::validate() const {
  require(nu_ > 0 && nv_ > 0 && pitch_ > 0, ErrorKind::Config, "invalid detector layout");
  require(!lambdas_.empty(), ErrorKind::Config, "projection set has no views");
  require(data_.size() == view_size() * lambdas_.size(), ErrorKind::Config, "projection data length mismatch");
  require(lambdas_.front() >= 0.0 && lambdas_.front() < 2.0 * std::numbers::pi, ErrorKind::Config,
          "first view angle must lie in [0, 2pi)");
  for (std::size_t j = 1; j < lambdas_.size(); ++j)
    require(lambdas_[j] > lambdas_[j - 1], ErrorKind::Config, "view angles must be strictly increasing");
  require(lambdas_.back() - lambdas_.front() < 2.0 * std::numbers::pi, ErrorKind::Config,
          "view angles must span less than a full turn");
  for (double v : data_) require(std::isfinite(v), ErrorKind::Config, "projection data contains non-finite values");
}

SliceAxis parse_slice_axis(std::string_view name) {
  if (name == "axial") return SliceAxis::Axial;
  if (name == "coronal") return SliceAxis::Coronal;
  if (name == "sagittal") return SliceAxis::Sagittal;
  fail(ErrorKind::Config, "unknown slice axis '" + std::string(name) + "'");
}

SliceImage extract_slice(const Volume3D& vol, SliceAxis axis, int index) {
  const GridShape& g = vol.shape();
  SliceImage s;
  switch (axis) {
    case SliceAxis::Axial:
      require(index >= 0 && index < g.nz, ErrorKind::Bounds, "axial index " + std::to_string(index) + " outside [0, nz)");
      s.rows = g.ny;
      s.cols = g.nx;
      s.row_spacing = g.spacing.y;
      s.col_spacing = g.spacing.x;
      s.data.resize(static_cast<std::size_t>(s.rows) * s.cols);
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) s(j, i) = vol(i, j, index);
      break;
    case SliceAxis::Coronal:
      require(index >= 0 && index < g.ny, ErrorKind::Bounds, "coronal index " + std::to_string(index) + " outside [0, ny)");
      s.rows = g.nz;
      s.cols = g.nx;
      s.row_spacing = g.spacing.z;
      s.col_spacing = g.spacing.x;
      s.data.resize(static_cast<std::size_t>(s.rows) * s.cols);
      for (int k = 0; k < g.nz; ++k)
        for (int i = 0; i < g.nx; ++i) s(k, i) = vol(i, index, k);
      break;
    case SliceAxis::Sagittal:
      require(index >= 0 && index < g.nx, ErrorKind::Bounds, "sagittal index " + std::to_string(index) + " outside [0, nx)");
      s.rows = g.nz;
      s.cols = g.ny;
      s.row_spacing = g.spacing.z;
      s.col_spacing = g.spacing.y;
      s.data.resize(static_cast<std::size_t>(s.rows) * s.cols);
      for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.ny; ++j) s(k, j) = vol(index, j, k);
      break;
  }
  return s;
}

void insert_axial_slice(Volume3D& vol, int k, const SliceImage& slice) {
  require(k >= 0 && k < vol.nz(), ErrorKind::Bounds, "axial index outside [0, nz)");
  require(slice.rows == vol.ny() && slice.cols == vol.nx(), ErrorKind::Config, "slice shape does not match volume");
  for (int j = 0; j < vol.ny(); ++j)
    for (int i = 0; i < vol.nx(); ++i) vol(i, j, k) = slice(j, i);
}

}  // namespace cbct
