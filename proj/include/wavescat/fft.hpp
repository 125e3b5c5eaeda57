#pragma once

#include <complex>
#include <span>
#include <vector>

namespace wavescat {

using cplx = std::complex<double>;

// Complex DFT of any length. The forward transform is unnormalized; the
// inverse carries the 1/N factor. `in` and `out` may alias.
void fft_forward(std::span<const cplx> in, std::span<cplx> out);
void fft_inverse(std::span<const cplx> in, std::span<cplx> out);

// DFT of a real sequence zero-padded to n samples (n >= x.size()).
std::vector<cplx> fft_real(std::span<const double> x, std::size_t n);

// Angular frequency of DFT bin k on a length-n grid, in rad/sample, mapped
// to (-pi, pi]. The Nyquist bin of an even grid maps to +pi.
double dft_omega(std::size_t k, std::size_t n);

std::size_t next_pow2(std::size_t n);

} // namespace wavescat
