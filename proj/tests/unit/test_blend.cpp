#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "cbct/blend.hpp"
#include "cbct/dbp.hpp"
#include "cbct/error.hpp"
#include "cbct/fft.hpp"
#include "support.hpp"

using namespace cbct;

namespace {

SliceImage random_slice(int rows, int cols, std::uint64_t seed) {
  return SliceImage{rows, cols, 1.0, 1.0, testing::random_vector(static_cast<std::size_t>(rows) * cols, seed)};
}

}  // namespace

TEST_SUITE("spectral-blend") {

TEST_CASE("mask weights lie in [0, 1], are symmetric and split DC evenly") {
  for (double td : {0.0, 5.0, 10.0, 30.0})
    for (auto [rows, cols] : {std::pair{32, 32}, std::pair{17, 24}}) {
      const BowTieMask m = make_bowtie_mask(rows, cols, td);
      CHECK(m(0, 0) == 0.5);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const double w = m(r, c);
          CHECK(w >= 0.0);
          CHECK(w <= 1.0);
          CHECK(w + (1.0 - w) == 1.0);
          CHECK(w == m((rows - r) % rows, (cols - c) % cols));
        }
    }
}

TEST_CASE("a zero-width transition gives a binary mask with half weight on the diagonals") {
  const BowTieMask m = make_bowtie_mask(16, 16, 0.0);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) {
      const double fy = std::abs(fft_frequency(r, 16)), fx = std::abs(fft_frequency(c, 16));
      if (fx == fy) CHECK(m(r, c) == 0.5);
      else CHECK(m(r, c) == (fx > fy ? 1.0 : 0.0));
    }
  CHECK_THROWS_AS(make_bowtie_mask(16, 16, -1.0), Error);
  CHECK_THROWS_AS(make_bowtie_mask(1, 16, 5.0), Error);
}

TEST_CASE("the coronal weight vanishes on the coronal-only missing region") {
  const ScanGeometry g = geometry_preset("desk");
  const int n = 32;
  const BowTieMask m = make_bowtie_mask(n, n, 0.0);
  int checked = 0;
  for (double wz : {0.02, 0.1, 0.3}) {
    const auto cor = missing_frequency_mask(g, {0, 0, 60}, PlaneDirection::Coronal, n, n, wz);
    const auto sag = missing_frequency_mask(g, {0, 0, 60}, PlaneDirection::Sagittal, n, n, wz);
    for (int i = 0; i < n * n; ++i)
      if (cor[i] && !sag[i]) {
        CHECK(m.w[i] == 0.0);
        ++checked;
      } else if (sag[i] && !cor[i]) {
        CHECK(m.w[i] == 1.0);
      }
  }
  CHECK(checked > 0);
}

TEST_CASE("agreeing inputs pass through and a full mask selects the coronal image") {
  const SliceImage f = random_slice(20, 28, 1);
  const BowTieMask m = make_bowtie_mask(20, 28, 10.0);
  const SliceImage out = blend_axial(f, f, m);
  CHECK(testing::rel_l2(out.data, f.data) <= 1e-6);
  BowTieMask ones = m;
  std::fill(ones.w.begin(), ones.w.end(), 1.0);
  const SliceImage zero{20, 28, 1.0, 1.0, std::vector<double>(20 * 28, 0.0)};
  CHECK(testing::rel_l2(blend_axial(f, zero, ones).data, f.data) <= 1e-12);
  CHECK_THROWS_AS(blend_axial(f, random_slice(20, 27, 2), m), Error);
}

TEST_CASE("blending is jointly linear") {
  const BowTieMask m = make_bowtie_mask(16, 16, 10.0);
  const SliceImage a = random_slice(16, 16, 3), b = random_slice(16, 16, 4);
  const SliceImage c = random_slice(16, 16, 5), d = random_slice(16, 16, 6);
  SliceImage ac = a, bd = b;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    ac.data[i] = 2.0 * a.data[i] + c.data[i];
    bd.data[i] = 2.0 * b.data[i] + d.data[i];
  }
  const SliceImage x = blend_axial(a, b, m), y = blend_axial(c, d, m), z = blend_axial(ac, bd, m);
  std::vector<double> lin(x.data.size());
  for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = 2.0 * x.data[i] + y.data[i];
  CHECK(testing::rel_l2(z.data, lin) <= 1e-6);
}

TEST_CASE("phase-aligned inputs never exceed the larger input spectrum") {
  const int n = 16;
  const BowTieMask m = make_bowtie_mask(n, n, 10.0);
  const SliceImage a = random_slice(n, n, 7);
  SliceImage b = a;
  for (std::size_t i = 0; i < b.data.size(); ++i) b.data[i] = 0.3 * a.data[i];
  const SliceImage out = blend_axial(a, b, m);
  auto spectrum = [&](const SliceImage& s) {
    std::vector<std::complex<double>> z(s.data.begin(), s.data.end());
    fft2d(z, n, n, false);
    return z;
  };
  const auto fa = spectrum(a), fb = spectrum(b), fo = spectrum(out);
  for (int i = 0; i < n * n; ++i) CHECK(std::abs(fo[i]) <= std::max(std::abs(fa[i]), std::abs(fb[i])) * (1 + 1e-9) + 1e-12);
}

TEST_CASE("volume blending works slice by slice") {
  const GridShape g = GridShape::centered(12, 10, 5, {1.0, 1.0, 1.0});
  const Volume3D a = testing::random_volume(g, 8);
  CHECK(testing::rel_l2(blend_volume(a, a, 10.0).values(), a.values()) <= 1e-6);
  BowTieMask ones = make_bowtie_mask(10, 12, 10.0);
  std::fill(ones.w.begin(), ones.w.end(), 1.0);
  CHECK(testing::rel_l2(blend_volume(a, Volume3D(g), ones).values(), a.values()) <= 1e-12);
  const Volume3D b = testing::random_volume(g, 9);
  const Volume3D v = blend_volume(a, b, 10.0);
  const BowTieMask m = make_bowtie_mask(10, 12, 10.0);
  const SliceImage s = blend_axial(extract_slice(a, SliceAxis::Axial, 3), extract_slice(b, SliceAxis::Axial, 3), m);
  CHECK(extract_slice(v, SliceAxis::Axial, 3).data == s.data);
  CHECK_THROWS_AS(blend_volume(a, Volume3D(GridShape::centered(4, 1.0)), 10.0), Error);
}

}
