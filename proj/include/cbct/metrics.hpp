#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbct/volume.hpp"

namespace cbct {

/// sum (f* - f)^2 / sum f*^2. Undefined-reference error when f* is all zero.
double nmse(std::span<const double> f, std::span<const double> ref);

/// 20 log10(N M |f*|_inf / |f - f*|_2), with the N M factor inside the
/// logarithm. +infinity when f == f*.
double psnr(std::span<const double> f, std::span<const double> ref, int n, int m);

/// Conventional 10 log10(|f*|_inf^2 / MSE). +infinity when f == f*.
double psnr_standard(std::span<const double> f, std::span<const double> ref);

/// SSIM from global means, variances and covariance, c1 = (k1 L)^2, c2 = (k2 L)^2.
double ssim(std::span<const double> f, std::span<const double> ref, double dynamic_range, double k1 = 0.01,
            double k2 = 0.03);

struct SliceMetrics {
  double z_mm = 0.0;
  std::optional<double> nmse;  // empty when the reference slice is all zero
  std::optional<double> psnr_db;
  std::optional<double> ssim;
};

struct MetricReport {
  double nmse = 0.0;
  double psnr_db = 0.0;           // mean of per-slice values over defined slices
  double psnr_standard_db = 0.0;  // whole volume
  double ssim = 0.0;              // mean of per-slice values over defined slices
  std::vector<SliceMetrics> per_slice;
};

/// Per-axial-slice NMSE over z.
std::vector<SliceMetrics> artifact_profile(const Volume3D& recon, const Volume3D& truth);

/// Metrics of `recon` against `truth` over axial slices [k_begin, k_end).
/// The dynamic range for SSIM is max - min of the truth over those slices
/// (1 when the truth is constant).
MetricReport evaluate(const Volume3D& recon, const Volume3D& truth, int k_begin = 0, int k_end = -1,
                      bool keep_slices = true);

/// key = value lines, then one CSV line per slice when present.
std::string format_report(const MetricReport& r, bool with_slices);

}  // namespace cbct
