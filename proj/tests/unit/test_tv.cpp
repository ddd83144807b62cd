#include <doctest.h>

#include <cmath>
#include <vector>

#include "cbct/tv.hpp"
#include "support.hpp"

using namespace cbct;

namespace {

double prox_objective(const std::vector<double>& x, const std::vector<double>& y, const TvDims& d, double mu) {
  double q = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) q += 0.5 * (x[i] - y[i]) * (x[i] - y[i]);
  return q + mu * tv_norm(x, d);
}

}  // namespace

TEST_SUITE("tv") {

TEST_CASE("tv norm of constants is zero and of a step is its height") {
  const TvDims d{4, 3, 2};
  CHECK(tv_norm(std::vector<double>(24, 3.0), d) == 0.0);
  std::vector<double> step(24, 0.0);
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 3; ++j)
      for (int i = 2; i < 4; ++i) step[(k * 3 + j) * 4 + i] = 1.5;
  CHECK(tv_norm(step, d) == doctest::Approx(1.5 * 6));
}

TEST_CASE("tv norm matches a direct triple loop") {
  const TvDims d{5, 4, 3};
  const auto x = testing::random_vector(60, 2);
  double ref = 0.0;
  for (int k = 0; k < 3; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 5; ++i) {
        const double v = x[(k * 4 + j) * 5 + i];
        if (i + 1 < 5) ref += std::abs(x[(k * 4 + j) * 5 + i + 1] - v);
        if (j + 1 < 4) ref += std::abs(x[(k * 4 + j + 1) * 5 + i] - v);
        if (k + 1 < 3) ref += std::abs(x[((k + 1) * 4 + j) * 5 + i] - v);
      }
  CHECK(tv_norm(x, d) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("the proximal map lowers the prox objective and preserves the mean") {
  const TvDims d{8, 8, 4};
  const auto y = testing::random_vector(256, 3);
  const double mu = 0.2;
  const auto x = tv_prox(y, d, mu, 50);
  CHECK(prox_objective(x, y, d, mu) < prox_objective(y, y, d, mu));
  double my = 0.0, mx = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    my += y[i];
    mx += x[i];
  }
  CHECK(mx == doctest::Approx(my).epsilon(1e-9));
  CHECK(tv_norm(x, d) < tv_norm(y, d));
}

TEST_CASE("zero weight is the identity and huge weight flattens") {
  const TvDims d{6, 5, 1};
  const auto y = testing::random_vector(30, 4);
  CHECK(tv_prox(y, d, 0.0, 10) == y);
  const auto flat = tv_prox(y, d, 1e3, 2000);
  CHECK(tv_norm(flat, d) < 1e-3 * tv_norm(y, d));
}

TEST_CASE("warm-started duals continue the iteration") {
  const TvDims d{8, 8, 1};
  const auto y = testing::random_vector(64, 5);
  std::vector<double> dual;
  const auto a = tv_prox(y, d, 0.1, 20, &dual);
  CHECK(dual.size() == 3 * 64);
  const auto b = tv_prox(y, d, 0.1, 20, &dual);
  const auto c = tv_prox(y, d, 0.1, 40);
  CHECK(testing::rel_l2(b, c) <= 1e-12);
  CHECK(testing::rel_l2(a, c) > 0.0);
}

}
