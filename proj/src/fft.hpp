#pragma once

#include <complex>
#include <cstddef>

namespace timelab::detail {

// Unitary centered DFT with the half-bin momentum offset:
//
//   forward:  out[k] = dx/sqrt(2pi) * sum_j in[j] exp(-i p_k x_j)
//   backward: out[j] = dp/sqrt(2pi) * sum_k in[k] exp(+i p_k x_j)
//
// with x_j = x_min + j*dx and p_k = dp*(k - n/2 + 1/2). Implemented as a
// phase-twisted FFT; forward∘backward is the identity to machine precision.
//
// Batched layout follows FFTW advanced interface semantics: `howmany`
// transforms of length n, consecutive elements of one transform `stride`
// apart, consecutive transforms `dist` apart. in == out is allowed.

void centered_dft(const std::complex<double>* in, std::complex<double>* out,
                  std::size_t n, double x_min, double dx, double dp, bool forward,
                  std::size_t howmany = 1, std::size_t stride = 1, std::size_t dist = 0);

}  // namespace timelab::detail
