#pragma once

#include "dlssm/pdmu.hpp"
#include "dlssm/types.hpp"

namespace dlssm {

/// Leaky integrate-and-fire configuration. `leak` is the per-step membrane
/// decay of stateful neurons (the encode layer and the output neuron; the
/// u/v branch is a stateless threshold). `surrogate_width` is the support
/// half-width of the triangular pseudo-derivative used in backward passes.
struct LifConfig {
  Scalar threshold = Scalar(1);
  Scalar leak = Scalar(1);
  Scalar surrogate_width = Scalar(1);
};

/// `hard` runs the true binary dynamics (Theta(x) = 1 iff x >= 0, hard reset
/// to zero). `soft` replaces Theta by the smooth ramp whose derivative is the
/// triangular surrogate, making the forward differentiable end to end; the
/// backward pass is identical code either way, which is what the gradient
/// suite validates.
enum class SpikingMode { hard, soft };

/// Triangular surrogate: max(0, 1 - |x|/width) / width.
Scalar surrogate_grad(Scalar x, const LifConfig& cfg);

/// Smooth ramp with derivative surrogate_grad; equals Theta outside
/// [-width, width].
Scalar smooth_step(Scalar x, const LifConfig& cfg);

/// Theta(x) = 1 iff x >= 0 in hard mode, smooth_step in soft mode.
Scalar spike_fn(Scalar x, const LifConfig& cfg, SpikingMode mode);

struct LifStepResult {
  Vec spikes;
  Vec potential;  // after reset
};

/// p' = leak * potential + input; spike where p' - threshold >= 0; spiking
/// entries reset to zero.
LifStepResult lif_step(const Vec& potential, const Vec& input, const LifConfig& cfg,
                       SpikingMode mode = SpikingMode::hard);

/// Throws std::invalid_argument unless every entry is exactly 0 or 1.
void validate_binary(const Mat& spikes, const char* what);

struct EncoderParams {
  Mat W;  // C x M
  Mat b;  // C x 1
  Index channels() const { return W.rows(); }
};

template <typename P, typename F>
void visit_encoder_fields(P& p, F&& f) {
  f("W", p.W);
  f("b", p.b);
}

struct EncoderGrads {
  Mat W, b;
};

struct EncodeCache {
  Mat x;       // T x M real input
  Mat s;       // T x C projection
  Mat p;       // T x C pre-reset potential
  Mat spikes;  // T x C
  SpikingMode mode = SpikingMode::hard;
};

/// One LIF layer over a linear projection of a real-valued sequence.
Mat spike_encode(const EncoderParams& enc, const Mat& x, const LifConfig& cfg,
                 SpikingMode mode = SpikingMode::hard, EncodeCache* cache = nullptr);

EncoderGrads spike_encode_backward(const EncoderParams& enc, const LifConfig& cfg,
                                   const EncodeCache& cache, const Mat& d_spikes,
                                   Mat* dx = nullptr);

struct SpikingCache {
  Mat x;        // T x M binary input
  Mat s_u, s_v; // T x 1 projections (pre-threshold)
  Mat u, v;     // T x 1 binary (or soft)
  Mat m;        // T x q
  Mat d;        // T x n
  Mat gates;    // T x n
  Mat mask;     // efficient only
  Mat h;        // T x q
  Mat p;        // T x q pre-reset output potential
  Mat spikes;   // T x q
  SpikingMode mode = SpikingMode::hard;
};

struct SpikingOutput {
  Mat spikes;      // T x q
  Mat potentials;  // T x q pre-reset membrane trace (decoding input)
  long long synops = 0;
};

/// Spiking delayed-memory layer: binary scalar branches u = Theta(W_u x - th)
/// and v = Theta(W_v x - th) drive the memory and gate scans, the combined
/// state h feeds an output LIF neuron per memory dimension. Sequential
/// (step-unrolled) evaluation only; the binary nonlinearity breaks the LTI
/// parallel form between layers. `synops` counts spike-triggered accumulates.
SpikingOutput spiking_dmu_forward(const PdmuParams& p, const LifConfig& cfg, const Mat& spikes_in,
                                  SpikingMode mode = SpikingMode::hard,
                                  SpikingCache* cache = nullptr);

struct SpikingGrads {
  Mat W_u, b_u, W_v, b_v;
};

/// Reverse pass with the triangular surrogate standing in for dTheta/dx.
/// Upstream can arrive on the spike outputs, the potential trace, or both.
SpikingGrads spiking_dmu_backward(const PdmuParams& p, const LifConfig& cfg,
                                  const SpikingCache& cache, const Mat& d_spikes,
                                  const Mat& d_potentials, Mat* dx = nullptr);

}  // namespace dlssm
