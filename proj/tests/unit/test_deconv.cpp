#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "cbct/deconv.hpp"
#include "cbct/error.hpp"
#include "cbct/phantoms.hpp"
#include "support.hpp"

using namespace cbct;

namespace {

struct PlaneCase {
  ScanGeometry geom = geometry_preset("desk");
  GridShape grid;
  PlaneOfInterest plane;
  PlaneGrid pg;
  std::vector<double> f;

  PlaneCase(int n, double spacing, int index) : grid(GridShape::centered(n, spacing)) {
    const std::vector<Primitive> pr{Primitive::sphere({0, 0, 0}, 0.3 * n * spacing),
                                    Primitive::sphere({0.12 * n * spacing, 0, 0.15 * n * spacing}, 0.08 * n * spacing, 0.5)};
    const Volume3D vol = make_primitive_volume(pr, grid);
    plane = plane_of_interest(geom, PlaneDirection::Coronal, plane_offset(grid, PlaneDirection::Coronal, index));
    pg = plane_grid(plane, grid);
    f.resize(pg.size());
    for (int k = 0; k < n; ++k)
      for (int t = 0; t < n; ++t) f[k * n + t] = vol(t, index, k);
  }
  PlaneSystem system(bool both) const {
    std::vector<ArcSpec> arcs{short_arc(plane)};
    if (both) arcs.push_back(complement_arc(plane));
    return build_plane_system(geom, plane, arcs, pg);
  }
};

// Smallest eigenvalue of A^T A from power iteration on (L I - A^T A).
double smallest_eigenvalue(const PlaneSystem& sys, int iterations) {
  const double L = sys.normal_norm(60);
  std::vector<double> v = testing::random_vector(sys.cols(), 3);
  double top = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double n = testing::norm2(v);
    for (double& x : v) x /= n;
    const auto av = sys.normal(v);
    std::vector<double> w(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) w[i] = L * v[i] - av[i];
    top = testing::dot(v, w);
    v = w;
  }
  return L - top;
}

}  // namespace

TEST_SUITE("factor-deconv") {

TEST_CASE("the plane operator maps zero to zero and has an exact adjoint") {
  const PlaneCase c(32, 4.0, 16);
  const PlaneSystem sys = c.system(true);
  CHECK(sys.rows() == 2 * sys.cols());
  for (double x : sys.apply(std::vector<double>(sys.cols(), 0.0))) CHECK(x == 0.0);
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto f = testing::random_vector(sys.cols(), seed);
    const auto g = testing::random_vector(sys.rows(), seed + 10);
    const auto af = sys.apply(f), atg = sys.apply_adjoint(g);
    CHECK(std::abs(testing::dot(af, g) - testing::dot(f, atg)) <= 1e-10 * testing::norm2(af) * testing::norm2(g));
    const auto n1 = sys.normal(f), n2 = sys.apply_adjoint(af);
    CHECK(testing::rel_l2(n1, n2) <= 1e-12);
  }
}

TEST_CASE("the complementary arc block is the negated short block") {
  const PlaneCase c(32, 4.0, 10);
  const auto g = c.system(true).apply(c.f);
  const std::size_t n = c.f.size();
  for (std::size_t i = 0; i < n; ++i) CHECK(g[i] == -g[n + i]);
}

TEST_CASE("a point source only reaches the Hilbert-broadened lines through it") {
  const PlaneCase c(32, 4.0, 16);
  const PlaneSystem sys = c.system(false);
  std::vector<double> f(sys.cols(), 0.0);
  const int t0 = 20, z0 = 24;
  f[z0 * 32 + t0] = 1.0;
  const auto g = sys.apply(f);
  // On its own row the response is the Hilbert kernel: odd about the point.
  CHECK(std::abs(g[z0 * 32 + t0 + 1]) > 0.0);
  // Rows far from z0 are reached only through the two tilted lines, which stay within |z - z0| scaled by the lever.
  double far = 0.0;
  for (int k = 0; k < 32; ++k)
    if (std::abs(k - z0) > 8)
      for (int t = 0; t < 32; ++t) far = std::max(far, std::abs(g[k * 32 + t]));
  CHECK(far == 0.0);
  CHECK(std::isfinite(testing::norm2(g)));
}

TEST_CASE("noiseless forward-then-invert recovers a 64x64 plane") {
  const PlaneCase c(64, 2.0, 32);
  const PlaneSystem sys = c.system(true);
  const auto g = sys.apply(c.f);
  DeconvConfig cfg;
  cfg.reg_weight = 1e-3;
  const DeconvResult r = deconvolve_plane(sys, g, cfg);
  CHECK(r.converged);
  CHECK(testing::rel_l2(r.f, c.f) <= 0.10);
}

TEST_CASE("a support mask pins the unknowns outside it") {
  const PlaneCase c(32, 4.0, 16);
  PlaneSystem sys = c.system(true);
  std::vector<double> sup(sys.cols(), 0.0);
  for (std::size_t i = 0; i < sup.size(); ++i) sup[i] = c.f[i] != 0.0 ? 1.0 : 0.0;
  sys.set_support(sup);
  const DeconvResult r = deconvolve_plane(sys, sys.apply(c.f), DeconvConfig{});
  for (std::size_t i = 0; i < sup.size(); ++i)
    if (sup[i] == 0.0) CHECK(r.f[i] == 0.0);
  CHECK(testing::rel_l2(r.f, c.f) <= 0.05);
  CHECK_THROWS_AS(sys.set_support(std::vector<double>(3)), Error);
}

TEST_CASE("zero data gives zero and huge weights shrink to zero") {
  const PlaneCase c(32, 4.0, 16);
  const PlaneSystem sys = c.system(true);
  for (Regularizer reg : {Regularizer::Tikhonov, Regularizer::Tv}) {
    DeconvConfig cfg;
    cfg.regularizer = reg;
    cfg.max_iter = 30;
    const auto r = deconvolve_plane(sys, std::vector<double>(sys.rows(), 0.0), cfg);
    CHECK(testing::norm2(r.f) == 0.0);
  }
  DeconvConfig big;
  big.reg_weight = 1e6;
  const auto g = sys.apply(c.f);
  const auto r = deconvolve_plane(sys, g, big);
  CHECK(testing::norm2(r.f) <= 1e-5 * testing::norm2(c.f));
}

TEST_CASE("solver objectives never increase") {
  const PlaneCase c(32, 4.0, 12);
  const PlaneSystem sys = c.system(true);
  auto g = sys.apply(c.f);
  const auto noise = testing::random_vector(g.size(), 5, -0.05, 0.05);
  const double scale = testing::norm2(g) / std::sqrt(static_cast<double>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += scale * noise[i];
  for (Regularizer reg : {Regularizer::Tikhonov, Regularizer::Tv}) {
    DeconvConfig cfg;
    cfg.regularizer = reg;
    cfg.max_iter = 60;
    const auto r = deconvolve_plane(sys, g, cfg);
    REQUIRE(r.objective.size() >= 2);
    for (std::size_t i = 1; i < r.objective.size(); ++i)
      CHECK(r.objective[i] <= r.objective[i - 1] + 1e-9 * std::abs(r.objective[i - 1]));
  }
}

TEST_CASE("inversion is odd in the data") {
  const PlaneCase c(32, 4.0, 16);
  const PlaneSystem sys = c.system(true);
  const auto g = sys.apply(c.f);
  std::vector<double> ng(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) ng[i] = -g[i];
  for (Regularizer reg : {Regularizer::Tikhonov, Regularizer::Tv}) {
    DeconvConfig cfg;
    cfg.regularizer = reg;
    cfg.max_iter = 40;
    const auto a = deconvolve_plane(sys, g, cfg).f;
    const auto b = deconvolve_plane(sys, ng, cfg).f;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(-a[i]).epsilon(1e-9));
  }
}

TEST_CASE("two arcs condition the plane better than one") {
  const PlaneCase c(32, 4.0, 16);
  const double one = smallest_eigenvalue(c.system(false), 400);
  const double two = smallest_eigenvalue(c.system(true), 400);
  CHECK(two > one);
}

TEST_CASE("mismatched data and degenerate planes are rejected") {
  const PlaneCase c(32, 4.0, 16);
  const PlaneSystem sys = c.system(true);
  CHECK_THROWS_AS(deconvolve_plane(sys, std::vector<double>(5), DeconvConfig{}), Error);
  PlaneOfInterest tangent = c.plane;
  tangent.half_chord = 0.0;
  try {
    build_plane_system(c.geom, tangent, {short_arc(c.plane)}, c.pg);
    FAIL("tangent plane accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Geometry);
  }
  CHECK_THROWS_AS(build_plane_system(c.geom, c.plane, {ArcSpec::full()}, c.pg), Error);
  DeconvConfig bad;
  bad.reg_weight = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.reg_weight = 1e-3;
  bad.max_iter = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(parse_regularizer("tv") == Regularizer::Tv);
  CHECK_THROWS_AS(parse_regularizer("l0"), Error);
}

TEST_CASE("planes assemble into volumes and back") {
  const GridShape g = GridShape::centered(6, 5, 4, {1.0, 1.0, 1.0});
  for (PlaneDirection d : {PlaneDirection::Coronal, PlaneDirection::Sagittal}) {
    const int count = plane_count(g, d);
    const int nt = d == PlaneDirection::Coronal ? g.nx : g.ny;
    std::vector<std::vector<double>> planes(count, std::vector<double>(nt * g.nz, 2.5));
    const Volume3D flat = assemble_volume(planes, d, g);
    for (double x : flat.values()) CHECK(x == 2.5);
    for (int p = 0; p < count; ++p) planes[p] = testing::random_vector(nt * g.nz, 40 + p);
    CHECK(disassemble_volume(assemble_volume(planes, d, g), d) == planes);
    planes.pop_back();
    try {
      assemble_volume(planes, d, g);
      FAIL("missing plane accepted");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Assembly);
    }
  }
}

TEST_CASE("an external operator is driven through files") {
  const PlaneCase c(16, 8.0, 8);
  const PlaneSystem sys = c.system(true);
  const auto g = testing::random_vector(sys.rows(), 2);
  const auto dir = testing::scratch_dir("external_op");
  const ExternalOperator op(ECHO_OPERATOR, dir.string());
  const auto out = op.invert(sys, g);
  REQUIRE(out.size() == sys.cols());
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(-static_cast<float>(g[i])));

  setenv("ECHO_OPERATOR_FAIL", "1", 1);
  CHECK_THROWS_AS(op.invert(sys, g), Error);
  unsetenv("ECHO_OPERATOR_FAIL");
}

TEST_CASE("whole-direction deconvolution with the built-in solver") {
  const ScanGeometry geom = geometry_preset("desk");
  const GridShape grid = GridShape::centered(16, 8.0);
  const std::vector<Primitive> pr{Primitive::sphere({0, 0, 0}, 40.0)};
  const Volume3D truth = make_primitive_volume(pr, grid);
  for (PlaneDirection d : {PlaneDirection::Coronal, PlaneDirection::Sagittal}) {
    const auto planes = disassemble_volume(truth, d);
    std::vector<std::vector<double>> sp(planes.size()), cp(planes.size());
    for (int p = 0; p < static_cast<int>(planes.size()); ++p) {
      const PlaneOfInterest poi = plane_of_interest(geom, d, plane_offset(grid, d, p));
      const PlaneSystem sys = build_plane_system(geom, poi, {short_arc(poi)}, plane_grid(poi, grid));
      sp[p] = sys.apply(planes[p]);
      cp[p] = sp[p];
      for (double& x : cp[p]) x = -x;
    }
    const std::vector<Volume3D> stacks{assemble_volume(sp, d, grid), assemble_volume(cp, d, grid)};
    const Volume3D rec = deconvolve_direction(stacks, {ArcKind::Short, ArcKind::Complement}, nullptr, nullptr, geom,
                                              d, RegularizedInversion(DeconvConfig{}));
    CHECK(testing::rel_l2(rec.values(), truth.values()) <= 0.10);
    // The sphere is symmetric in z, and so is its reconstruction.
    double asym = 0.0, tot = 0.0;
    for (int k = 0; k < grid.nz; ++k)
      for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i) {
          asym += std::pow(rec(i, j, k) - rec(i, j, grid.nz - 1 - k), 2);
          tot += std::pow(rec(i, j, k), 2);
        }
    CHECK(std::sqrt(asym / tot) <= 0.02);
  }
}

}
