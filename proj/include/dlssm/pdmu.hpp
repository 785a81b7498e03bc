#pragma once

#include <iosfwd>
#include <utility>

#include "dlssm/ssm.hpp"
#include "dlssm/types.hpp"

namespace dlssm {

enum class Variant { plain, bidirectional, efficient };

/// Delay-gated memory layer. On top of the LMU fields it carries a second
/// frozen state space of order n whose softmaxed state emits, at every step,
/// n coefficients routing the current memory vector to offsets 1..n into the
/// future (plus an implicit unit self-connection).
struct PdmuParams {
  Mat W_u, b_u;          // 1 x M, 1 x 1
  Mat W_v, b_v;          // 1 x M, 1 x 1
  Mat W_v_rev, b_v_rev;  // bidirectional only; empty otherwise
  Mat W_x;               // N x M
  Mat W_h;               // N x q
  Mat b_o;               // N x 1
  DiscreteSystem memory;  // order q
  DiscreteSystem gate;    // order n
  Scalar theta = 0;
  Scalar gate_theta = 0;
  Activation f_u = Activation::relu;
  Activation f_o = Activation::relu;
  Variant variant = Variant::plain;

  Index input_dim() const { return W_u.cols(); }
  Index hidden_dim() const { return W_x.rows(); }
  Index memory_order() const { return W_h.cols(); }
  Index delay_count() const { return gate.order(); }

  /// Trainable scalars.
  Index param_count() const;
  /// Scalars a sequential-inference implementation retains between steps:
  /// N readout + q memory + n gate states. The length-n ring of pending
  /// q-vector contributions is working storage on top of this core count.
  Index runtime_state_count() const;
};

template <typename P, typename F>
void visit_pdmu_fields(P& p, F&& f) {
  f("W_u", p.W_u);
  f("b_u", p.b_u);
  f("W_v", p.W_v);
  f("b_v", p.b_v);
  if (p.W_v_rev.size() > 0) f("W_v_rev", p.W_v_rev);
  if (p.b_v_rev.size() > 0) f("b_v_rev", p.b_v_rev);
  f("W_x", p.W_x);
  f("W_h", p.W_h);
  f("b_o", p.b_o);
}

struct PdmuGrads {
  Mat W_u, b_u, W_v, b_v, W_v_rev, b_v_rev, W_x, W_h, b_o;
};

/// Banded storage of the gate matrix of the parallel form: row i holds the
/// unit diagonal plus the forward gates d_1[i]..d_n[i] (column i+1..i+n of
/// the dense matrix). Bidirectional adds the mirrored backward band.
struct GateMatrix {
  Index T = 0;
  Index n = 0;
  Mat fwd;  // T x n, fwd(i, j-1) = gate emitted at step i for offset j
  Mat bwd;  // T x n or empty
  Mat dense() const;
};

struct GateCache {
  Mat s_v;       // T x 1 pre-activation
  Mat v;         // T x 1
  Mat d;         // T x n scan output (time order of emission)
  Mat gates;     // T x n softmax rows
  bool reversed = false;  // scan ran over time-reversed input
};

/// Softmax-normalized delay gates from the layer's gate state space.
/// `reversed` runs the scan over the time-reversed projection (the backward
/// direction of the bidirectional variant) using W_v_rev/b_v_rev.
Mat delay_gates(const PdmuParams& p, const Mat& x, Mode mode, bool reversed = false,
                GateCache* cache = nullptr, const ScanOptions& scan = {});

/// h[k] = m[k] + sum_{j=1..n} fwd(k-j, j-1) m[k-j] (+ mirrored backward sum
/// when `bwd` is non-null). Out-of-range steps contribute zero. For the
/// efficient variant the one-hot mask is applied to `fwd` internally.
Mat combine_delayed(const Mat& m, const Mat& gates_fwd, const Mat* gates_bwd, Variant variant);

GateMatrix build_gate_matrix(const Mat& gates_fwd, const Mat* gates_bwd, Variant variant);

/// Column-band evaluation of the matrix form; equals combine_delayed.
Mat gate_matrix_combine(const GateMatrix& gm, const Mat& m);

/// One-hot argmax per row (ties break toward the lowest offset) and the
/// gates with that mask applied.
std::pair<Mat, Mat> efficient_mask(const Mat& gates);

/// Plain-text numeric grid: rows = emission step, columns = offsets 1..n.
void dump_gate_band(const Mat& band, std::ostream& os);

struct PdmuCache {
  Mat x;
  Mat s_u, u;  // T x 1
  Mat m;       // T x q
  GateCache gate_fwd;
  GateCache gate_bwd;  // bidirectional only
  Mat mask;            // efficient only
  Mat h;               // T x q
  Mat z;               // T x N
  Mode mode = Mode::parallel;
  ScanOptions scan;
};

struct PdmuOutput {
  Mat o;  // T x N
  Mat h;  // T x q
};

PdmuOutput pdmu_forward(const PdmuParams& p, const Mat& x, Mode mode, PdmuCache* cache = nullptr,
                        const ScanOptions& scan = {});

PdmuGrads pdmu_backward(const PdmuParams& p, const PdmuCache& cache, const Mat& d_o,
                        Mat* dx = nullptr);

/// Single-owner streaming state for real-time inference (plain/efficient).
/// Holds exactly the q + n scan states plus the n-slot ring of pending
/// delayed contributions.
class PdmuState {
 public:
  explicit PdmuState(const PdmuParams& p);

  /// Consumes one input row and produces the layer output at that step.
  Vec step(const RowVec& x_k);

  const Vec& last_h() const { return h_; }
  const Vec& last_u() const { return u_; }
  const Vec& last_v() const { return v_; }
  const Vec& last_gates() const { return gates_; }
  const Vec& memory_state() const { return m_; }
  const Vec& gate_state() const { return d_; }

 private:
  const PdmuParams* p_;
  Vec m_, d_;     // scan states
  Mat pending_;   // n x q ring of scheduled contributions
  Index pos_ = 0;
  Vec h_, u_, v_, gates_;
};

}  // namespace dlssm
