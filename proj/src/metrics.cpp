#include "cbct/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cbct/error.hpp"
#include "cbct/io.hpp"

namespace cbct {

namespace {

void check_sizes(std::span<const double> f, std::span<const double> ref) {
  require(f.size() == ref.size(), ErrorKind::Config, "metric inputs differ in size");
  require(!f.empty(), ErrorKind::Config, "metric inputs are empty");
}

double sq_diff(std::span<const double> f, std::span<const double> ref) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += (ref[i] - f[i]) * (ref[i] - f[i]);
  return s;
}

double peak(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double nmse(std::span<const double> f, std::span<const double> ref) {
  check_sizes(f, ref);
  double den = 0.0;
  for (double r : ref) den += r * r;
  require(den > 0.0, ErrorKind::UndefinedReference, "NMSE is undefined for an all-zero reference");
  return sq_diff(f, ref) / den;
}

double psnr(std::span<const double> f, std::span<const double> ref, int n, int m) {
  check_sizes(f, ref);
  const double err = std::sqrt(sq_diff(f, ref));
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  const double p = peak(ref);
  require(p > 0.0, ErrorKind::UndefinedReference, "PSNR is undefined for an all-zero reference");
  return 20.0 * std::log10(static_cast<double>(n) * m * p / err);
}

double psnr_standard(std::span<const double> f, std::span<const double> ref) {
  check_sizes(f, ref);
  const double mse = sq_diff(f, ref) / static_cast<double>(f.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  const double p = peak(ref);
  require(p > 0.0, ErrorKind::UndefinedReference, "PSNR is undefined for an all-zero reference");
  return 10.0 * std::log10(p * p / mse);
}

double ssim(std::span<const double> f, std::span<const double> ref, double dynamic_range, double k1, double k2) {
  check_sizes(f, ref);
  require(dynamic_range > 0, ErrorKind::Config, "SSIM dynamic range must be positive");
  const double n = static_cast<double>(f.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    mx += f[i];
    my += ref[i];
  }
  mx /= n;
  my /= n;
  double vx = 0.0, vy = 0.0, cxy = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = f[i] - mx, b = ref[i] - my;
    vx += a * a;
    vy += b * b;
    cxy += a * b;
  }
  vx /= n;
  vy /= n;
  cxy /= n;
  const double c1 = (k1 * dynamic_range) * (k1 * dynamic_range);
  const double c2 = (k2 * dynamic_range) * (k2 * dynamic_range);
  return ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

std::vector<SliceMetrics> artifact_profile(const Volume3D& recon, const Volume3D& truth) {
  require(recon.shape() == truth.shape(), ErrorKind::Config, "reconstruction and truth differ in shape");
  std::vector<SliceMetrics> out;
  const std::size_t plane = static_cast<std::size_t>(truth.nx()) * truth.ny();
  for (int k = 0; k < truth.nz(); ++k) {
    SliceMetrics s;
    s.z_mm = truth.shape().z(k);
    const std::span<const double> r = recon.data().subspan(k * plane, plane);
    const std::span<const double> t = truth.data().subspan(k * plane, plane);
    if (peak(t) > 0.0) s.nmse = nmse(r, t);
    out.push_back(s);
  }
  return out;
}

MetricReport evaluate(const Volume3D& recon, const Volume3D& truth, int k_begin, int k_end, bool keep_slices) {
  require(recon.shape() == truth.shape(), ErrorKind::Config, "reconstruction and truth differ in shape");
  if (k_end < 0) k_end = truth.nz();
  require(0 <= k_begin && k_begin < k_end && k_end <= truth.nz(), ErrorKind::Bounds, "slice range out of bounds");
  const std::size_t plane = static_cast<std::size_t>(truth.nx()) * truth.ny();
  const std::span<const double> rv = recon.data().subspan(k_begin * plane, (k_end - k_begin) * plane);
  const std::span<const double> tv = truth.data().subspan(k_begin * plane, (k_end - k_begin) * plane);
  MetricReport rep;
  rep.nmse = nmse(rv, tv);
  rep.psnr_standard_db = psnr_standard(rv, tv);
  const auto [lo, hi] = std::minmax_element(tv.begin(), tv.end());
  const double range = *hi > *lo ? *hi - *lo : 1.0;
  double psum = 0.0, ssum = 0.0;
  int count = 0;
  for (int k = k_begin; k < k_end; ++k) {
    SliceMetrics s;
    s.z_mm = truth.shape().z(k);
    const std::span<const double> r = recon.data().subspan(k * plane, plane);
    const std::span<const double> t = truth.data().subspan(k * plane, plane);
    if (peak(t) > 0.0) {
      s.nmse = nmse(r, t);
      s.psnr_db = psnr(r, t, truth.ny(), truth.nx());
      s.ssim = ssim(r, t, range);
      psum += *s.psnr_db;
      ssum += *s.ssim;
      ++count;
    }
    if (keep_slices) rep.per_slice.push_back(s);
  }
  rep.psnr_db = psum / count;
  rep.ssim = ssum / count;
  return rep;
}

std::string format_report(const MetricReport& r, bool with_slices) {
  std::ostringstream os;
  os << "nmse = " << format_double(r.nmse) << "\n";
  os << "psnr_db = " << format_double(r.psnr_db) << "\n";
  os << "psnr_standard_db = " << format_double(r.psnr_standard_db) << "\n";
  os << "ssim = " << format_double(r.ssim) << "\n";
  if (with_slices && !r.per_slice.empty()) {
    os << "z_mm,nmse,psnr_db,ssim\n";
    const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("nan"); };
    for (const SliceMetrics& s : r.per_slice)
      os << format_double(s.z_mm) << "," << opt(s.nmse) << "," << opt(s.psnr_db) << "," << opt(s.ssim) << "\n";
  }
  return os.str();
}

}  // namespace cbct
