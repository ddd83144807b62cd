#include <doctest.h>

#include <cmath>
#include <vector>

#include "cbct/error.hpp"
#include "cbct/fdk.hpp"
#include "cbct/fft.hpp"
#include "cbct/metrics.hpp"
#include "cbct/phantoms.hpp"
#include "cbct/projector.hpp"
#include "support.hpp"

using namespace cbct;

TEST_SUITE("fdk") {

TEST_CASE("zero projections reconstruct to zero") {
  const ScanGeometry g = geometry_preset("mini");
  const GridShape grid = GridShape::centered(16, 8.0);
  ProjectionSet p(g.nu, g.nv, g.pitch, arc_lambdas(ArcSpec::full(), g.n_views));
  const Volume3D v = fdk_reconstruct(p, g, FdkConfig{}, grid);
  for (double x : v.values()) CHECK(x == 0.0);
}

TEST_CASE("ramp response rises linearly and honours the cutoff") {
  const double du = 0.5;
  const auto r = ramp_response(256, du, FdkConfig{});
  REQUIRE(r.size() == 129);
  CHECK(std::abs(r[0]) < 0.01 * r[128]);
  CHECK(r[128] == doctest::Approx(1.0 / (2 * du)).epsilon(0.01));  // |f| at Nyquist
  CHECK(r[64] == doctest::Approx(0.5 / (2 * du)).epsilon(0.02));
  FdkConfig half;
  half.cutoff = 0.5;
  const auto c = ramp_response(256, du, half);
  CHECK(c[100] == 0.0);
  CHECK(c[60] == doctest::Approx(r[60]));
  FdkConfig sl;
  sl.filter = RampWindow::SheppLogan;
  const auto s = ramp_response(256, du, sl);
  CHECK(s[128] < r[128]);
  CHECK(s[128] == doctest::Approx(r[128] * 2.0 / M_PI).epsilon(1e-6));
}

TEST_CASE("row filtering is linear and shift-equivariant") {
  const int n = 64;
  RowFilter f(n, next_pow2(2 * n), ramp_response(next_pow2(2 * n), 1.0, FdkConfig{}));
  std::vector<double> a(n, 0.0), b(n, 0.0);
  a[20] = 1.0;
  b[30] = 1.0;
  f.apply(a);
  f.apply(b);
  for (int i = 5; i < 40; ++i) CHECK(b[i + 10] == doctest::Approx(a[i]).epsilon(1e-9));
  std::vector<double> x = testing::random_vector(n, 1), y = testing::random_vector(n, 2), z(n);
  for (int i = 0; i < n; ++i) z[i] = 3.0 * x[i] - y[i];
  f.apply(x);
  f.apply(y);
  f.apply(z);
  for (int i = 0; i < n; ++i) CHECK(z[i] == doctest::Approx(3.0 * x[i] - y[i]).epsilon(1e-9));
}

TEST_CASE("midplane of a centered sphere is accurate") {
  const ScanGeometry g = geometry_preset("mini");
  const GridShape grid = GridShape::centered(64, 4.0);
  const std::vector<Primitive> s{Primitive::sphere({0, 0, 0}, 60.0)};
  const Volume3D truth = make_primitive_volume(s, grid);
  const ProjectionSet p = forward_project(truth, g, ArcSpec::full());
  const Volume3D rec = fdk_reconstruct(p, g, FdkConfig{}, grid);
  for (int k : {31, 32}) {
    const SliceImage a = extract_slice(rec, SliceAxis::Axial, k), b = extract_slice(truth, SliceAxis::Axial, k);
    CHECK(nmse(a.data, b.data) <= 1e-2);
  }
}

TEST_CASE("unsupported modes and irregular scans are refused") {
  const ScanGeometry g = geometry_preset("mini");
  const GridShape grid = GridShape::centered(8, 8.0);
  ProjectionSet p(g.nu, g.nv, g.pitch, arc_lambdas(ArcSpec::full(), g.n_views));
  FdkConfig sc;
  sc.short_scan = true;
  try {
    fdk_reconstruct(p, g, sc, grid);
    FAIL("short scan accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Unsupported);
  }
  auto l = arc_lambdas(ArcSpec::full(), g.n_views);
  l[5] += 0.01;
  ProjectionSet q(g.nu, g.nv, g.pitch, l);
  try {
    fdk_reconstruct(q, g, FdkConfig{}, grid);
    FAIL("irregular scan accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
  FdkConfig bad;
  bad.cutoff = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(parse_ramp_window("shepp-logan") == RampWindow::SheppLogan);
  CHECK_THROWS_AS(parse_ramp_window("hann"), Error);
}

}
