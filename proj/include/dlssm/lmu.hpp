#pragma once

#include "dlssm/ssm.hpp"
#include "dlssm/types.hpp"

namespace dlssm {

/// One Legendre memory layer: scalar input projection u[k], frozen memory
/// state space of order q spanning a theta-step window, nonlinear readout.
struct LmuParams {
  Mat W_u;  // 1 x M
  Mat b_u;  // 1 x 1
  Mat W_x;  // N x M
  Mat W_m;  // N x q
  Mat b_o;  // N x 1
  DiscreteSystem memory;  // order q
  Scalar theta = 0;       // window length in steps
  Activation f_u = Activation::relu;
  Activation f_o = Activation::relu;

  Index input_dim() const { return W_u.cols(); }
  Index hidden_dim() const { return W_x.rows(); }
  Index memory_order() const { return W_m.cols(); }
  Index param_count() const;
};

/// Applies f to every trainable field as (name, matrix). Works for both the
/// parameter struct and its gradient mirror.
template <typename P, typename F>
void visit_lmu_fields(P& p, F&& f) {
  f("W_u", p.W_u);
  f("b_u", p.b_u);
  f("W_x", p.W_x);
  f("W_m", p.W_m);
  f("b_o", p.b_o);
}

struct LmuGrads {
  Mat W_u, b_u, W_x, W_m, b_o;
};

struct LmuCache {
  Mat x;    // T x M
  Mat s_u;  // T x 1 pre-activation of u
  Mat u;    // T x 1
  Mat m;    // T x q
  Mat z;    // T x N pre-activation of o
  Mode mode = Mode::parallel;
  ScanOptions scan;
};

struct LmuOutput {
  Mat o;  // T x N
  Mat m;  // T x q
};

/// Builds the frozen memory system for a layer: the order-q delay network
/// discretized at dt/theta, i.e. a theta-step sliding window.
DiscreteSystem make_window_system(Index order, Scalar theta, Scalar dt = Scalar(1));

LmuOutput lmu_forward(const LmuParams& p, const Mat& x, Mode mode, LmuCache* cache = nullptr,
                      const ScanOptions& scan = {});

LmuGrads lmu_backward(const LmuParams& p, const LmuCache& cache, const Mat& d_o, Mat* dx = nullptr);

/// Decodes the window content at a delay of fraction*theta steps into the
/// past: sum_i P_i(2*fraction - 1) m_k[i], P_i the Legendre polynomials.
Scalar window_reconstruct(const Vec& m_k, Scalar fraction);

/// P_0..P_{count-1} evaluated at x in [-1, 1] by the three-term recurrence.
Vec legendre_values(Index count, Scalar x);

}  // namespace dlssm
