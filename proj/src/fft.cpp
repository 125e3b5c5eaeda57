#include "wavescat/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace wavescat {
namespace {

// FFTW planning is not thread-safe; execution of a finished plan is. Plans
// are created unaligned so that the chosen codelets (and hence the rounding)
// do not depend on where the caller's buffers happen to live.
class PlanCache {
public:
  ~PlanCache() {
    for (auto &[key, plan] : plans_)
      fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end())
      return it->second;
    std::vector<cplx> a(n), b(n);
    fftw_plan plan = fftw_plan_dft_1d(
        static_cast<int>(n), reinterpret_cast<fftw_complex *>(a.data()),
        reinterpret_cast<fftw_complex *>(b.data()), sign,
        FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_PRESERVE_INPUT);
    if (!plan)
      throw std::runtime_error("fftw: failed to create plan");
    plans_.emplace(key, plan);
    return plan;
  }

private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache &cache() {
  static PlanCache instance;
  return instance;
}

void execute(std::span<const cplx> in, std::span<cplx> out, int sign) {
  if (in.size() != out.size())
    throw std::invalid_argument("fft: input and output lengths differ");
  const std::size_t n = in.size();
  if (n == 0)
    return;
  fftw_plan plan = cache().get(n, sign);
  auto *dst = reinterpret_cast<fftw_complex *>(out.data());
  if (in.data() == out.data()) {
    // Plans are out-of-place.
    std::vector<cplx> tmp(in.begin(), in.end());
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex *>(tmp.data()), dst);
  } else {
    auto *src = reinterpret_cast<fftw_complex *>(const_cast<cplx *>(in.data()));
    fftw_execute_dft(plan, src, dst);
  }
}

} // namespace

void fft_forward(std::span<const cplx> in, std::span<cplx> out) {
  execute(in, out, FFTW_FORWARD);
}

void fft_inverse(std::span<const cplx> in, std::span<cplx> out) {
  execute(in, out, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(out.size());
  for (auto &v : out)
    v *= scale;
}

std::vector<cplx> fft_real(std::span<const double> x, std::size_t n) {
  if (n < x.size())
    throw std::invalid_argument("fft_real: transform shorter than input");
  std::vector<cplx> buf(n);
  std::copy(x.begin(), x.end(), buf.begin());
  fft_forward(buf, buf);
  return buf;
}

double dft_omega(std::size_t k, std::size_t n) {
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
  if (2 * k <= n)
    return step * static_cast<double>(k);
  return -step * static_cast<double>(n - k);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n)
    p <<= 1;
  return p;
}

} // namespace wavescat
