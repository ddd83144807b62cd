#include "cbct/tv.hpp"

#include <algorithm>
#include <cmath>

#include "cbct/error.hpp"
#include "cbct/parallel.hpp"

namespace cbct {

namespace {

std::size_t stride_of(const TvDims& d, int axis) {
  std::size_t s = 1;
  for (int a = 0; a < axis; ++a) s *= static_cast<std::size_t>(d[a]);
  return s;
}

std::size_t total(const TvDims& d) { return static_cast<std::size_t>(d[0]) * d[1] * d[2]; }

int coord(const TvDims& d, std::size_t idx, int axis) {
  return static_cast<int>((idx / stride_of(d, axis)) % static_cast<std::size_t>(d[axis]));
}

}  // namespace

double tv_norm(std::span<const double> x, const TvDims& dims) {
  require(x.size() == total(dims), ErrorKind::Config, "TV input size does not match its dimensions");
  double acc = 0.0;
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 2) continue;
    const std::size_t st = stride_of(dims, a);
    for (std::size_t i = 0; i < x.size(); ++i)
      if (coord(dims, i, a) + 1 < dims[a]) acc += std::abs(x[i + st] - x[i]);
  }
  return acc;
}

std::vector<double> tv_prox(std::span<const double> y, const TvDims& dims, double mu, int iterations,
                            std::vector<double>* dual) {
  const std::size_t n = total(dims);
  require(y.size() == n, ErrorKind::Config, "TV input size does not match its dimensions");
  require(mu >= 0, ErrorKind::Config, "TV weight must be non-negative");
  std::vector<double> x(y.begin(), y.end());
  if (mu == 0.0 || iterations <= 0) return x;

  std::vector<double> local;
  std::vector<double>& p = dual ? *dual : local;
  if (p.size() != 3 * n) p.assign(3 * n, 0.0);

  int active = 0;
  for (int a = 0; a < 3; ++a) active += dims[a] > 1;
  if (active == 0) return x;
  const double tau = 1.0 / (4.0 * active);

  std::array<std::size_t, 3> st{stride_of(dims, 0), stride_of(dims, 1), stride_of(dims, 2)};
  // x = y - D^T p, with (D x)_a[i] = x[i + st_a] - x[i] where defined, else 0.
  const auto primal = [&]() {
    parallel_for(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        double v = y[i];
        for (int a = 0; a < 3; ++a) {
          if (dims[a] < 2) continue;
          const int c = coord(dims, i, a);
          const double* pa = p.data() + a * n;
          if (c + 1 < dims[a]) v += pa[i];
          if (c > 0) v -= pa[i - st[a]];
        }
        x[i] = v;
      }
    });
  };
  primal();
  for (int it = 0; it < iterations; ++it) {
    parallel_for(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i)
        for (int a = 0; a < 3; ++a) {
          if (dims[a] < 2) continue;
          double* pa = p.data() + a * n;
          if (coord(dims, i, a) + 1 < dims[a]) {
            pa[i] = std::clamp(pa[i] + tau * (x[i + st[a]] - x[i]), -mu, mu);
          } else {
            pa[i] = 0.0;
          }
        }
    });
    primal();
  }
  return x;
}

}  // namespace cbct
