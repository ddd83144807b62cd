#include "cbct/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cbct/error.hpp"

namespace cbct {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;
}  // namespace

double ScanGeometry::half_cone_angle() const { return std::atan(0.5 * nv * pitch / source_detector); }
double ScanGeometry::half_fan_angle() const { return std::atan(0.5 * nu * pitch / source_detector); }
double ScanGeometry::fov_radius() const { return source_radius * std::sin(half_fan_angle()); }

void ScanGeometry::validate() const {
  require(source_radius > 0, ErrorKind::Config, "source radius must be positive");
  require(source_detector > source_radius, ErrorKind::Config, "source-detector distance must exceed the source radius");
  require(nu >= 1 && nv >= 1, ErrorKind::Config, "detector must have at least one cell per axis");
  require(pitch > 0, ErrorKind::Config, "detector pitch must be positive");
  require(n_views >= 1, ErrorKind::Config, "need at least one view");
  if (declared_cone_deg) {
    const double actual = half_cone_angle() * kRadToDeg;
    require(std::abs(actual - *declared_cone_deg) <= 0.1, ErrorKind::Config,
            "declared cone angle " + std::to_string(*declared_cone_deg) + " deg disagrees with detector (" +
                std::to_string(actual) + " deg)");
  }
}

ScanGeometry geometry_preset(std::string_view name) {
  ScanGeometry g;
  if (name == "aapm-sim") {
    g = {500.0, 1000.0, 1440, 1440, 1.0, 1200, 35.8};
  } else if (name == "head-real") {
    // The nominal 10.32 deg for this scanner does not match atan(nv*pitch/2/D) = 5.2 deg, so none is declared.
    g = {1700.0, 2250.0, 1024, 1024, 0.4, 360, std::nullopt};
  } else if (name == "desk") {
    g = {500.0, 1000.0, 256, 256, 2.0, 360, std::nullopt};
  } else if (name == "mini") {
    g = {500.0, 1000.0, 128, 128, 4.0, 180, std::nullopt};
  } else {
    fail(ErrorKind::Config, "unknown geometry preset '" + std::string(name) + "'");
  }
  g.validate();
  return g;
}

std::vector<std::string> geometry_preset_names() { return {"aapm-sim", "head-real", "desk", "mini"}; }

Vec3 source_position(const ScanGeometry& geom, double lambda) {
  const double l = wrap_angle(lambda);
  return {geom.source_radius * std::cos(l), geom.source_radius * std::sin(l), 0.0};
}

Vec3 virtual_source(const ScanGeometry& geom, double lambda, double z) {
  return source_position(geom, lambda) + Vec3{0.0, 0.0, z};
}

ViewFrame view_frame(const ScanGeometry& geom, double lambda) {
  const double c = std::cos(lambda);
  const double s = std::sin(lambda);
  return {{geom.source_radius * c, geom.source_radius * s, 0.0}, {-c, -s, 0.0}, {-s, c, 0.0}};
}

double wrap_angle(double lambda) {
  double l = std::fmod(lambda, kTwoPi);
  if (l < 0) l += kTwoPi;
  if (l >= kTwoPi) l -= kTwoPi;
  return l;
}

PlaneDirection parse_direction(std::string_view name) {
  if (name == "coronal") return PlaneDirection::Coronal;
  if (name == "sagittal") return PlaneDirection::Sagittal;
  fail(ErrorKind::Config, "unknown plane direction '" + std::string(name) + "'");
}

const char* to_string(PlaneDirection d) { return d == PlaneDirection::Coronal ? "coronal" : "sagittal"; }

PlaneOfInterest plane_of_interest(const ScanGeometry& geom, PlaneDirection direction, double s) {
  const double R = geom.source_radius;
  require(std::abs(s) < R, ErrorKind::Geometry,
          "plane offset " + std::to_string(s) + " mm does not cut the trajectory (radius " + std::to_string(R) + ")");
  PlaneOfInterest p;
  p.direction = direction;
  p.s = s;
  if (direction == PlaneDirection::Coronal) {
    const double a = std::asin(s / R);
    p.lambda_minus = wrap_angle(a);
    p.lambda_plus = wrap_angle(std::numbers::pi - a);
  } else {
    const double a = std::acos(s / R);
    p.lambda_minus = wrap_angle(a);
    p.lambda_plus = wrap_angle(kTwoPi - a);
  }
  const Vec3 am = source_position(geom, p.lambda_minus);
  const Vec3 ap = source_position(geom, p.lambda_plus);
  const Vec3 chord = ap - am;
  p.half_chord = 0.5 * norm(chord);
  p.e = chord / (2.0 * p.half_chord);
  p.e_z = {0.0, 0.0, 1.0};
  p.e_perp = cross(p.e_z, p.e);
  p.chord_offset = dot(0.5 * (am + ap), p.e_perp);
  p.t_range = {-p.half_chord, p.half_chord};
  const double zc = 0.5 * geom.nv * geom.pitch * R / geom.source_detector;
  p.z_range = {-zc, zc};
  return p;
}

Vec3 world_from_chord(const PlaneOfInterest& p, double t, double z) {
  return t * p.e + p.chord_offset * p.e_perp + z * p.e_z;
}

std::pair<double, double> chord_from_world(const PlaneOfInterest& p, const Vec3& x) {
  return {dot(x, p.e), dot(x, p.e_z)};
}

const char* to_string(ArcKind k) {
  switch (k) {
    case ArcKind::Short: return "short";
    case ArcKind::Complement: return "complement";
    case ArcKind::Full: return "full";
  }
  return "full";
}

ArcKind parse_arc_kind(std::string_view name) {
  if (name == "short") return ArcKind::Short;
  if (name == "complement") return ArcKind::Complement;
  if (name == "full") return ArcKind::Full;
  fail(ErrorKind::Config, "unknown arc kind '" + std::string(name) + "'");
}

ArcSpec ArcSpec::full() { return {ArcKind::Full, 0.0, kTwoPi}; }

double ArcSpec::overlap(double a, double b) const {
  const double len = b - a;
  if (len <= 0) return 0.0;
  const double L = length();
  if (L >= kTwoPi) return len;
  const double start = wrap_angle(a - lambda_minus);
  const auto seg = [&](double lo, double hi) { return std::max(0.0, std::min(start + len, hi) - std::max(start, lo)); };
  return seg(0.0, L) + seg(kTwoPi, kTwoPi + L);
}

ArcSpec short_arc(const PlaneOfInterest& p) {
  double hi = p.lambda_plus;
  if (hi <= p.lambda_minus) hi += kTwoPi;
  return {ArcKind::Short, p.lambda_minus, hi};
}

ArcSpec complement_arc(const PlaneOfInterest& p) {
  double hi = p.lambda_minus;
  if (hi <= p.lambda_plus) hi += kTwoPi;
  return {ArcKind::Complement, p.lambda_plus, hi};
}

int plane_count(const GridShape& shape, PlaneDirection direction) {
  return direction == PlaneDirection::Coronal ? shape.ny : shape.nx;
}

double plane_offset(const GridShape& shape, PlaneDirection direction, int index) {
  return direction == PlaneDirection::Coronal ? shape.y(index) : shape.x(index);
}

PlaneGrid plane_grid(const PlaneOfInterest& p, const GridShape& shape) {
  PlaneGrid g;
  g.nz = shape.nz;
  g.z0 = shape.origin.z;
  g.dz = shape.spacing.z;
  if (p.direction == PlaneDirection::Coronal) {
    g.nt = shape.nx;
    const Vec3 first{shape.x(0), p.s, 0.0};
    g.t0 = chord_from_world(p, first).first;
    g.dt = dot(Vec3{shape.spacing.x, 0.0, 0.0}, p.e);
  } else {
    g.nt = shape.ny;
    const Vec3 first{p.s, shape.y(0), 0.0};
    g.t0 = chord_from_world(p, first).first;
    g.dt = dot(Vec3{0.0, shape.spacing.y, 0.0}, p.e);
  }
  return g;
}

}  // namespace cbct
