#include "dlssm/ssm.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <sstream>

#include "dlssm/errors.hpp"
#include "dlssm/expm.hpp"

namespace dlssm {

ContinuousSystem pade_matrices(Index order) {
  if (order < 1) throw std::invalid_argument("pade_matrices: order must be >= 1");
  ContinuousSystem sys;
  sys.A.resize(order, order);
  sys.B.resize(order);
  for (Index i = 0; i < order; ++i) {
    const Scalar scale = Scalar(2 * i + 1);
    sys.B(i) = scale * (i % 2 == 0 ? Scalar(1) : Scalar(-1));
    for (Index j = 0; j < order; ++j) {
      if (i < j) {
        sys.A(i, j) = -scale;
      } else {
        sys.A(i, j) = ((i - j + 1) % 2 == 0 ? Scalar(1) : Scalar(-1)) * scale;
      }
    }
  }
  return sys;
}

DiscreteSystem zoh_discretize(const ContinuousSystem& sys, Scalar dt) {
  if (dt <= Scalar(0)) throw std::invalid_argument("zoh_discretize: dt must be positive");
  const Index n = sys.order();
  if (sys.B.size() != n) throw std::invalid_argument("zoh_discretize: A/B dimension mismatch");

  Mat aug = Mat::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = sys.A * dt;
  aug.topRightCorner(n, 1) = sys.B * dt;
  const Mat phi = expm(aug);

  DiscreteSystem out;
  out.A_bar = phi.topLeftCorner(n, n);
  out.B_bar = phi.topRightCorner(n, 1);
  out.dt = dt;
  if (!out.A_bar.allFinite() || !out.B_bar.allFinite()) {
    const Scalar snorm = Mat(sys.A * dt).jacobiSvd().singularValues()(0);
    std::ostringstream msg;
    msg << "zoh_discretize: non-finite result (dt=" << dt << ", ||A*dt||_2=" << snorm << ")";
    throw NumericError(msg.str());
  }
  return out;
}

Mat sequential_scan(const DiscreteSystem& sys, const Vec& u, const Vec& m0) {
  const Index T = u.size();
  const Index n = sys.order();
  if (T < 1) throw std::invalid_argument("sequential_scan: empty input");
  if (m0.size() != n) throw std::invalid_argument("sequential_scan: m0 length mismatch");

  Mat m(T, n);
  Vec state = m0;
  for (Index k = 0; k < T; ++k) {
    state = sys.A_bar * state + sys.B_bar * u(k);
    m.row(k) = state.transpose();
  }
  return m;
}

ImpulseKernel impulse_kernel(const DiscreteSystem& sys, Index length) {
  if (length < 1) throw std::invalid_argument("impulse_kernel: length must be >= 1");
  ImpulseKernel k;
  k.taps.resize(sys.order(), length);
  Vec tap = sys.B_bar;
  for (Index j = 0; j < length; ++j) {
    k.taps.col(j) = tap;
    if (j + 1 < length) tap = sys.A_bar * tap;
  }
  return k;
}

namespace {

void precompute_fft(ImpulseKernel& k) {
  const auto T = static_cast<std::size_t>(k.length());
  k.fft_size = fft::next_pow2(2 * T - 1);
  k.tap_fft.resize(static_cast<std::size_t>(k.order()));
  std::vector<Scalar> row(T);
  for (Index i = 0; i < k.order(); ++i) {
    for (Index j = 0; j < k.length(); ++j) row[static_cast<std::size_t>(j)] = k.taps(i, j);
    k.tap_fft[static_cast<std::size_t>(i)] = fft::forward_real(row.data(), T, k.fft_size);
  }
}

struct KernelKey {
  std::string bytes;
  bool operator<(const KernelKey& o) const { return bytes < o.bytes; }
};

KernelKey make_key(const DiscreteSystem& sys, Index length, bool with_fft) {
  KernelKey key;
  const Index n = sys.order();
  key.bytes.reserve(static_cast<std::size_t>(n * n + n + 3) * sizeof(Scalar));
  auto append = [&key](const void* p, std::size_t sz) {
    key.bytes.append(static_cast<const char*>(p), sz);
  };
  append(&n, sizeof(n));
  append(&length, sizeof(length));
  append(&with_fft, sizeof(with_fft));
  append(&sys.dt, sizeof(sys.dt));
  append(sys.A_bar.data(), sizeof(Scalar) * static_cast<std::size_t>(n * n));
  append(sys.B_bar.data(), sizeof(Scalar) * static_cast<std::size_t>(n));
  return key;
}

std::shared_ptr<const ImpulseKernel> cached_kernel(const DiscreteSystem& sys, Index length,
                                                   bool with_fft) {
  static std::mutex mu;
  static std::map<KernelKey, std::shared_ptr<const ImpulseKernel>> cache;
  const KernelKey key = make_key(sys, length, with_fft);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto kernel = std::make_shared<ImpulseKernel>(impulse_kernel(sys, length));
  if (with_fft) precompute_fft(*kernel);
  auto shared = std::shared_ptr<const ImpulseKernel>(std::move(kernel));
  cache.emplace(key, shared);
  return shared;
}

}  // namespace

std::shared_ptr<const ImpulseKernel> shared_kernel(const DiscreteSystem& sys, Index length,
                                                   bool with_fft) {
  return cached_kernel(sys, length, with_fft);
}

Mat direct_convolve(const ImpulseKernel& kernel, const Vec& u) {
  const Index T = u.size();
  if (T < 1) throw std::invalid_argument("direct_convolve: empty input");
  if (kernel.length() < T) throw std::invalid_argument("direct_convolve: kernel shorter than input");
  Mat m = Mat::Zero(T, kernel.order());
  for (Index k = 0; k < T; ++k) {
    for (Index j = 0; j <= k; ++j) {
      m.row(k) += u(j) * kernel.taps.col(k - j).transpose();
    }
  }
  return m;
}

Mat fft_convolve(const ImpulseKernel& kernel, const Vec& u) {
  const Index T = u.size();
  if (T < 1) throw std::invalid_argument("fft_convolve: empty input");
  if (kernel.length() < T) throw std::invalid_argument("fft_convolve: kernel shorter than input");

  const auto t = static_cast<std::size_t>(T);
  Mat m(T, kernel.order());
  const bool reuse = kernel.fft_size >= fft::next_pow2(2 * t - 1) && !kernel.tap_fft.empty();
  if (reuse) {
    // One input FFT, then a pointwise product per state dimension.
    std::vector<fft::Complex> fu = fft::forward_real(u.data(), t, kernel.fft_size);
    std::vector<fft::Complex> prod(kernel.fft_size);
    for (Index i = 0; i < kernel.order(); ++i) {
      const auto& kf = kernel.tap_fft[static_cast<std::size_t>(i)];
      for (std::size_t s = 0; s < kernel.fft_size; ++s) prod[s] = fu[s] * kf[s];
      fft::transform(prod, true);
      for (Index k = 0; k < T; ++k) m(k, i) = prod[static_cast<std::size_t>(k)].real();
    }
    return m;
  }

  std::vector<Scalar> row(t);
  for (Index i = 0; i < kernel.order(); ++i) {
    for (Index j = 0; j < T; ++j) row[static_cast<std::size_t>(j)] = kernel.taps(i, j);
    const auto out = fft::convolve(u.data(), t, row.data(), t, t);
    for (Index k = 0; k < T; ++k) m(k, i) = out[static_cast<std::size_t>(k)];
  }
  return m;
}

Mat parallel_scan(const DiscreteSystem& sys, const Vec& u, const ScanOptions& opts) {
  const Index T = u.size();
  if (T < 1) throw std::invalid_argument("parallel_scan: empty input");
  const bool use_fft = T >= opts.fft_threshold;
  auto kernel = shared_kernel(sys, T, use_fft);
  return use_fft ? fft_convolve(*kernel, u) : direct_convolve(*kernel, u);
}

Mat add_initial_state(const DiscreteSystem& sys, Mat m, const Vec& m0) {
  if (m0.size() != sys.order()) throw std::invalid_argument("add_initial_state: m0 length mismatch");
  Vec free_resp = m0;
  for (Index k = 0; k < m.rows(); ++k) {
    free_resp = sys.A_bar * free_resp;
    m.row(k) += free_resp.transpose();
  }
  return m;
}

Vec scan_input_adjoint(const DiscreteSystem& sys, const Mat& dm, Mode mode,
                       const ScanOptions& opts) {
  const Index T = dm.rows();
  const Index n = sys.order();
  if (dm.cols() != n) throw std::invalid_argument("scan_input_adjoint: dm width mismatch");
  if (T < 1) throw std::invalid_argument("scan_input_adjoint: empty adjoint");

  if (mode == Mode::sequential || T < opts.fft_threshold) {
    Vec du(T);
    Vec lambda = Vec::Zero(n);
    for (Index k = T - 1; k >= 0; --k) {
      lambda = sys.A_bar.transpose() * lambda + dm.row(k).transpose();
      du(k) = sys.B_bar.dot(lambda);
    }
    return du;
  }

  // du[j] = sum_{k >= j} taps[k-j] . dm[k]: correlate each state dimension of
  // dm with its kernel row, which is a convolution against time-reversed dm.
  auto kernel = shared_kernel(sys, T, true);
  const auto t = static_cast<std::size_t>(T);
  Vec du = Vec::Zero(T);
  std::vector<Scalar> rev(t);
  std::vector<fft::Complex> prod(kernel->fft_size);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < T; ++k) rev[static_cast<std::size_t>(k)] = dm(T - 1 - k, i);
    auto fr = fft::forward_real(rev.data(), t, kernel->fft_size);
    const auto& kf = kernel->tap_fft[static_cast<std::size_t>(i)];
    for (std::size_t s = 0; s < kernel->fft_size; ++s) prod[s] = fr[s] * kf[s];
    fft::transform(prod, true);
    for (Index k = 0; k < T; ++k)
      du(k) += prod[static_cast<std::size_t>(T - 1 - k)].real();
  }
  return du;
}

}  // namespace dlssm
