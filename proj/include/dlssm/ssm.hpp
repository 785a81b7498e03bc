#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "dlssm/fft.hpp"
#include "dlssm/types.hpp"

namespace dlssm {

/// Continuous-time single-input LTI system m'(t) = A m(t) + B u(t).
struct ContinuousSystem {
  Mat A;  // order x order
  Vec B;  // order x 1
  Index order() const { return A.rows(); }
};

/// Exact zero-order-hold discretization m[k] = A_bar m[k-1] + B_bar u[k].
struct DiscreteSystem {
  Mat A_bar;
  Vec B_bar;
  Scalar dt = Scalar(1);
  Index order() const { return A_bar.rows(); }
};

/// Impulse response taps[j] = A_bar^j B_bar, stored as columns of an
/// order x T matrix. `tap_fft` optionally holds each state dimension's
/// spectrum at `fft_size` padding so repeated convolutions skip the
/// kernel-side transforms.
struct ImpulseKernel {
  Mat taps;
  std::vector<std::vector<fft::Complex>> tap_fft;
  std::size_t fft_size = 0;
  Index order() const { return taps.rows(); }
  Index length() const { return taps.cols(); }
};

/// Legendre delay-network matrices: a_ij = (2i+1) * (-1 if i<j else
/// (-1)^(i-j+1)), b_i = (2i+1)(-1)^i, 0-based. All entries are integers.
ContinuousSystem pade_matrices(Index order);

/// ZOH discretization via the augmented exponential exp([[A,B],[0,0]] dt),
/// so no inverse of A is required. Throws NumericError if the exponential
/// overflows (message reports dt and the spectral norm of A*dt).
DiscreteSystem zoh_discretize(const ContinuousSystem& sys, Scalar dt);

struct ScanOptions {
  /// Below this sequence length the parallel path uses direct convolution.
  Index fft_threshold = 64;
};

/// Step-by-step recurrence; row k of the result is m[k+1] in 1-based paper
/// indexing. O(1) state per step.
Mat sequential_scan(const DiscreteSystem& sys, const Vec& u, const Vec& m0);

/// All-steps-at-once evaluation of the same recurrence as a causal
/// convolution of u with the impulse kernel. Assumes zero initial state;
/// fold a nonzero one in with `add_initial_state`.
Mat parallel_scan(const DiscreteSystem& sys, const Vec& u, const ScanOptions& opts = {});

ImpulseKernel impulse_kernel(const DiscreteSystem& sys, Index length);

/// Process-wide cache of kernels keyed by (system contents, length).
/// The returned kernel has its spectra precomputed when `with_fft` is set.
std::shared_ptr<const ImpulseKernel> shared_kernel(const DiscreteSystem& sys, Index length,
                                                   bool with_fft);

/// FFT-based causal convolution; requires kernel.length() >= u.size().
Mat fft_convolve(const ImpulseKernel& kernel, const Vec& u);

/// Reference direct convolution (quadratic in T).
Mat direct_convolve(const ImpulseKernel& kernel, const Vec& u);

/// Adds the free response A_bar^k m0 to a zero-initial-state scan result.
Mat add_initial_state(const DiscreteSystem& sys, Mat m, const Vec& m0);

/// Adjoint of the scan with respect to its scalar input sequence:
/// du[k] = B_bar^T lambda[k] with lambda[k] = dm[k] + A_bar^T lambda[k+1].
/// The parallel mode evaluates the same sums as an FFT correlation.
Vec scan_input_adjoint(const DiscreteSystem& sys, const Mat& dm, Mode mode,
                       const ScanOptions& opts = {});

}  // namespace dlssm
