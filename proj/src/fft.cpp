#include "cbct/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include "cbct/error.hpp"

namespace cbct {

namespace {
// The FFTW planner is not thread-safe; execution with new arrays is.
std::mutex g_plan_mutex;

struct FftwDeleter {
  void operator()(void* p) const { fftw_free(p); }
};
}  // namespace

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

struct RowFilter::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

RowFilter::RowFilter(int row_length, int padded_length, std::vector<double> response)
    : row_length_(row_length), padded_(padded_length), response_(std::move(response)), plans_(new Plans) {
  require(row_length > 0 && padded_length >= row_length, ErrorKind::Config, "invalid row filter lengths");
  require(static_cast<int>(response_.size()) == padded_ / 2 + 1, ErrorKind::Config,
          "row filter response has wrong length");
  std::unique_ptr<double, FftwDeleter> re(fftw_alloc_real(static_cast<std::size_t>(padded_)));
  std::unique_ptr<fftw_complex, FftwDeleter> sp(fftw_alloc_complex(static_cast<std::size_t>(padded_ / 2 + 1)));
  std::lock_guard lock(g_plan_mutex);
  plans_->forward = fftw_plan_dft_r2c_1d(padded_, re.get(), sp.get(), FFTW_ESTIMATE);
  plans_->inverse = fftw_plan_dft_c2r_1d(padded_, sp.get(), re.get(), FFTW_ESTIMATE);
}

RowFilter::~RowFilter() {
  std::lock_guard lock(g_plan_mutex);
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->inverse) fftw_destroy_plan(plans_->inverse);
}

void RowFilter::apply(std::span<double> row) const {
  require(static_cast<int>(row.size()) == row_length_, ErrorKind::Config, "row length mismatch");
  std::unique_ptr<double, FftwDeleter> re(fftw_alloc_real(static_cast<std::size_t>(padded_)));
  std::unique_ptr<fftw_complex, FftwDeleter> sp(fftw_alloc_complex(static_cast<std::size_t>(padded_ / 2 + 1)));
  double* buf = re.get();
  for (int i = 0; i < padded_; ++i) buf[i] = i < row_length_ ? row[i] : 0.0;
  fftw_execute_dft_r2c(plans_->forward, buf, sp.get());
  fftw_complex* s = sp.get();
  for (int k = 0; k <= padded_ / 2; ++k) {
    s[k][0] *= response_[k];
    s[k][1] *= response_[k];
  }
  fftw_execute_dft_c2r(plans_->inverse, s, buf);
  const double scale = 1.0 / padded_;
  for (int i = 0; i < row_length_; ++i) row[i] = buf[i] * scale;
}

void fft2d(std::vector<std::complex<double>>& data, int rows, int cols, bool inverse) {
  require(rows > 0 && cols > 0 && data.size() == static_cast<std::size_t>(rows) * cols, ErrorKind::Config,
          "fft2d shape mismatch");
  std::unique_ptr<fftw_complex, FftwDeleter> buf(fftw_alloc_complex(data.size()));
  fftw_plan plan;
  {
    std::lock_guard lock(g_plan_mutex);
    plan = fftw_plan_dft_2d(rows, cols, buf.get(), buf.get(), inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    buf.get()[i][0] = data[i].real();
    buf.get()[i][1] = data[i].imag();
  }
  fftw_execute(plan);
  const double scale = 1.0 / std::sqrt(static_cast<double>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = {buf.get()[i][0] * scale, buf.get()[i][1] * scale};
  std::lock_guard lock(g_plan_mutex);
  fftw_destroy_plan(plan);
}

}  // namespace cbct
