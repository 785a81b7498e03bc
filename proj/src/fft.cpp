#include "dlssm/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dlssm::fft {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void transform(std::vector<Complex>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft: length must be a nonzero power of two");

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const Scalar ang =
        Scalar(2) * std::numbers::pi_v<Scalar> / Scalar(len) * (inverse ? Scalar(1) : Scalar(-1));
    const Complex wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      Complex w(1);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const Complex u = a[i + k];
        const Complex v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }

  if (inverse) {
    const Scalar inv = Scalar(1) / Scalar(n);
    for (auto& x : a) x *= inv;
  }
}

std::vector<Complex> forward_real(const Scalar* data, std::size_t n, std::size_t padded) {
  std::vector<Complex> out(padded, Complex(0));
  for (std::size_t i = 0; i < n; ++i) out[i] = Complex(data[i], 0);
  transform(out, false);
  return out;
}

std::vector<Scalar> convolve_with_fft(const Scalar* a, std::size_t na,
                                      const std::vector<Complex>& b_fft, std::size_t out_len) {
  const std::size_t padded = b_fft.size();
  std::vector<Complex> fa = forward_real(a, na, padded);
  for (std::size_t i = 0; i < padded; ++i) fa[i] *= b_fft[i];
  transform(fa, true);
  std::vector<Scalar> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = fa[i].real();
  return out;
}

std::vector<Scalar> convolve(const Scalar* a, std::size_t na, const Scalar* b, std::size_t nb,
                             std::size_t out_len) {
  const std::size_t padded = next_pow2(na + nb - 1);
  return convolve_with_fft(a, na, forward_real(b, nb, padded), out_len);
}

}  // namespace dlssm::fft
