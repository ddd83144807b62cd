#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

namespace cbct {

/// Linear filtering of real rows by a zero-phase frequency response on a
/// zero-padded FFT grid. Plans are created with FFTW_ESTIMATE, so the same
/// inputs always produce the same bits.
class RowFilter {
 public:
  /// `response` has padded_length / 2 + 1 real gains for bins 0..P/2.
  RowFilter(int row_length, int padded_length, std::vector<double> response);
  ~RowFilter();
  RowFilter(const RowFilter&) = delete;
  RowFilter& operator=(const RowFilter&) = delete;

  int row_length() const { return row_length_; }
  int padded_length() const { return padded_; }
  /// Filters `row` in place. Safe to call concurrently.
  void apply(std::span<double> row) const;

 private:
  struct Plans;
  int row_length_;
  int padded_;
  std::vector<double> response_;
  std::unique_ptr<Plans> plans_;
};

/// Smallest power of two >= n.
int next_pow2(int n);

/// In-place unitary 2-D DFT of a row-major rows x cols array.
void fft2d(std::vector<std::complex<double>>& data, int rows, int cols, bool inverse);

}  // namespace cbct
