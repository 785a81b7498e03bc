#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "dlssm/types.hpp"

namespace dlssm::fft {

using Complex = std::complex<Scalar>;

std::size_t next_pow2(std::size_t n);

/// In-place iterative radix-2 transform. `a.size()` must be a power of two.
/// The inverse transform includes the 1/N normalization.
void transform(std::vector<Complex>& a, bool inverse);

/// Real-to-complex forward transform, zero-padded to `padded` (power of two).
std::vector<Complex> forward_real(const Scalar* data, std::size_t n, std::size_t padded);

/// First `out_len` samples of the causal linear convolution a*b, computed by
/// zero-padded FFT (pad >= |a|+|b|-1 so the circular wraparound is empty).
std::vector<Scalar> convolve(const Scalar* a, std::size_t na, const Scalar* b, std::size_t nb,
                             std::size_t out_len);

/// Convolution against a precomputed spectrum (for kernels reused many times).
/// `b_fft` must be forward_real(b, nb, padded) with padded >= na + nb - 1.
std::vector<Scalar> convolve_with_fft(const Scalar* a, std::size_t na,
                                      const std::vector<Complex>& b_fft, std::size_t out_len);

}  // namespace dlssm::fft
