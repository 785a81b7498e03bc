#include "dlssm/pdmu.hpp"

#include <ostream>
#include <stdexcept>

#include "dlssm/errors.hpp"

namespace dlssm {

namespace {

Mat softmax_rows(const Mat& z) {
  Mat out(z.rows(), z.cols());
  for (Index i = 0; i < z.rows(); ++i) {
    const RowVec row = z.row(i);
    const Scalar mx = row.maxCoeff();
    RowVec e = (row.array() - mx).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

// d softmax: dz = g .* (dg - (dg . g)) per row.
Mat softmax_rows_backward(const Mat& gates, const Mat& d_gates) {
  Mat dz(gates.rows(), gates.cols());
  for (Index i = 0; i < gates.rows(); ++i) {
    const Scalar dot = gates.row(i).dot(d_gates.row(i));
    dz.row(i) = gates.row(i).array() * (d_gates.row(i).array() - dot);
  }
  return dz;
}

}  // namespace

Index PdmuParams::param_count() const {
  Index count = W_u.size() + b_u.size() + W_v.size() + b_v.size() + W_x.size() + W_h.size() +
                b_o.size();
  count += W_v_rev.size() + b_v_rev.size();
  return count;
}

Index PdmuParams::runtime_state_count() const {
  return hidden_dim() + memory_order() + delay_count();
}

Mat delay_gates(const PdmuParams& p, const Mat& x, Mode mode, bool reversed, GateCache* cache,
                const ScanOptions& scan) {
  if (!x.allFinite()) throw std::invalid_argument("delay_gates: non-finite input");
  if (x.cols() != p.input_dim()) throw std::invalid_argument("delay_gates: input width mismatch");
  const Index T = x.rows();

  const Mat& W = reversed ? p.W_v_rev : p.W_v;
  const Mat& b = reversed ? p.b_v_rev : p.b_v;
  if (reversed && W.size() == 0)
    throw std::invalid_argument("delay_gates: layer has no backward gate parameters");

  const Mat s_v = (x * W.transpose()).rowwise() + RowVec::Constant(1, b(0, 0));
  const Mat v = apply_activation(p.f_u, s_v);

  Vec v_in = v.col(0);
  if (reversed) v_in.reverseInPlace();

  Mat d;
  if (mode == Mode::parallel) {
    d = parallel_scan(p.gate, v_in, scan);
  } else {
    d = sequential_scan(p.gate, v_in, Vec::Zero(p.gate.order()));
  }
  if (reversed) d.colwise().reverseInPlace();

  const Mat gates = softmax_rows(d);
  if (cache) {
    cache->s_v = s_v;
    cache->v = v;
    cache->d = d;
    cache->gates = gates;
    cache->reversed = reversed;
  }
  (void)T;
  return gates;
}

std::pair<Mat, Mat> efficient_mask(const Mat& gates) {
  Mat mask = Mat::Zero(gates.rows(), gates.cols());
  for (Index i = 0; i < gates.rows(); ++i) {
    Index best = 0;
    for (Index j = 1; j < gates.cols(); ++j) {
      if (gates(i, j) > gates(i, best)) best = j;  // ties keep the lowest offset
    }
    mask(i, best) = Scalar(1);
  }
  return {mask, gates.cwiseProduct(mask)};
}

Mat combine_delayed(const Mat& m, const Mat& gates_fwd, const Mat* gates_bwd, Variant variant) {
  const Index T = m.rows();
  if (gates_fwd.rows() != T) throw std::invalid_argument("combine_delayed: gate length mismatch");
  if (variant == Variant::bidirectional && gates_bwd == nullptr)
    throw std::invalid_argument("combine_delayed: bidirectional requires backward gates");

  const Index n = gates_fwd.cols();
  Mat fwd = gates_fwd;
  if (variant == Variant::efficient) fwd = efficient_mask(gates_fwd).second;

  Mat h = m;
  for (Index k = 0; k < T; ++k) {
    for (Index j = 1; j <= n && j <= k; ++j) {
      h.row(k) += fwd(k - j, j - 1) * m.row(k - j);
    }
  }
  if (variant == Variant::bidirectional) {
    const Mat& bwd = *gates_bwd;
    if (bwd.rows() != T) throw std::invalid_argument("combine_delayed: backward gate length mismatch");
    for (Index k = 0; k < T; ++k) {
      for (Index j = 1; j <= bwd.cols() && k + j < T; ++j) {
        h.row(k) += bwd(k + j, j - 1) * m.row(k + j);
      }
    }
  }
  return h;
}

GateMatrix build_gate_matrix(const Mat& gates_fwd, const Mat* gates_bwd, Variant variant) {
  if (gates_fwd.rows() < 1) throw std::invalid_argument("build_gate_matrix: empty gates");
  GateMatrix gm;
  gm.T = gates_fwd.rows();
  gm.n = gates_fwd.cols();
  gm.fwd = variant == Variant::efficient ? efficient_mask(gates_fwd).second : gates_fwd;
  if (variant == Variant::bidirectional) {
    if (gates_bwd == nullptr)
      throw std::invalid_argument("build_gate_matrix: bidirectional requires backward gates");
    gm.bwd = *gates_bwd;
  }
  return gm;
}

Mat GateMatrix::dense() const {
  Mat d = Mat::Zero(T, T);
  for (Index i = 0; i < T; ++i) {
    d(i, i) = Scalar(1);
    for (Index j = 1; j <= n && i + j < T; ++j) d(i, i + j) = fwd(i, j - 1);
  }
  if (bwd.size() > 0) {
    for (Index i = 0; i < T; ++i) {
      for (Index j = 1; j <= bwd.cols() && i - j >= 0; ++j) d(i, i - j) = bwd(i, j - 1);
    }
  }
  return d;
}

Mat gate_matrix_combine(const GateMatrix& gm, const Mat& m) {
  if (m.rows() != gm.T) throw std::invalid_argument("gate_matrix_combine: length mismatch");
  // Column k of the dense matrix: diagonal 1, fwd band above, bwd band below.
  Mat h = m;
  for (Index k = 0; k < gm.T; ++k) {
    for (Index j = 1; j <= gm.n && k - j >= 0; ++j) {
      h.row(k) += gm.fwd(k - j, j - 1) * m.row(k - j);
    }
    if (gm.bwd.size() > 0) {
      for (Index j = 1; j <= gm.bwd.cols() && k + j < gm.T; ++j) {
        h.row(k) += gm.bwd(k + j, j - 1) * m.row(k + j);
      }
    }
  }
  return h;
}

void dump_gate_band(const Mat& band, std::ostream& os) {
  for (Index i = 0; i < band.rows(); ++i) {
    for (Index j = 0; j < band.cols(); ++j) {
      if (j) os << ' ';
      os << band(i, j);
    }
    os << '\n';
  }
}

PdmuOutput pdmu_forward(const PdmuParams& p, const Mat& x, Mode mode, PdmuCache* cache,
                        const ScanOptions& scan) {
  if (!x.allFinite()) throw std::invalid_argument("pdmu_forward: non-finite input");
  if (x.cols() != p.input_dim()) throw std::invalid_argument("pdmu_forward: input width mismatch");
  if (p.variant == Variant::bidirectional && mode == Mode::sequential)
    throw UnsupportedModeError("pdmu_forward: bidirectional variant is non-causal; use parallel mode");

  const Index T = x.rows();
  PdmuOutput out;

  if (mode == Mode::sequential) {
    PdmuState state(p);
    out.o.resize(T, p.hidden_dim());
    out.h.resize(T, p.memory_order());
    Mat s_u(T, 1), u(T, 1), m(T, p.memory_order());
    GateCache gc;
    gc.s_v.resize(T, 1);
    gc.v.resize(T, 1);
    gc.d.resize(T, p.delay_count());
    gc.gates.resize(T, p.delay_count());
    for (Index k = 0; k < T; ++k) {
      out.o.row(k) = state.step(x.row(k)).transpose();
      out.h.row(k) = state.last_h().transpose();
      m.row(k) = state.memory_state().transpose();
      gc.d.row(k) = state.gate_state().transpose();
      gc.gates.row(k) = state.last_gates().transpose();
      u(k, 0) = state.last_u()(0);
      gc.v(k, 0) = state.last_v()(0);
    }
    if (cache) {
      s_u = (x * p.W_u.transpose()).rowwise() + RowVec::Constant(1, p.b_u(0, 0));
      gc.s_v = (x * p.W_v.transpose()).rowwise() + RowVec::Constant(1, p.b_v(0, 0));
      cache->x = x;
      cache->s_u = s_u;
      cache->u = u;
      cache->m = m;
      cache->gate_fwd = gc;
      if (p.variant == Variant::efficient) cache->mask = efficient_mask(gc.gates).first;
      cache->h = out.h;
      cache->z = (out.h * p.W_h.transpose() + x * p.W_x.transpose()).rowwise() + p.b_o.transpose();
      cache->mode = mode;
      cache->scan = scan;
    }
    return out;
  }

  const Mat s_u = (x * p.W_u.transpose()).rowwise() + RowVec::Constant(1, p.b_u(0, 0));
  const Mat u = apply_activation(p.f_u, s_u);
  const Mat m = parallel_scan(p.memory, u.col(0), scan);

  GateCache gate_fwd, gate_bwd;
  const Mat gates = delay_gates(p, x, mode, false, &gate_fwd, scan);
  const Mat* bwd = nullptr;
  if (p.variant == Variant::bidirectional) {
    delay_gates(p, x, mode, true, &gate_bwd, scan);
    bwd = &gate_bwd.gates;
  }

  const Mat h = combine_delayed(m, gates, bwd, p.variant);
  const Mat z = (h * p.W_h.transpose() + x * p.W_x.transpose()).rowwise() + p.b_o.transpose();

  out.o = apply_activation(p.f_o, z);
  out.h = h;

  if (cache) {
    cache->x = x;
    cache->s_u = s_u;
    cache->u = u;
    cache->m = m;
    cache->gate_fwd = gate_fwd;
    cache->gate_bwd = gate_bwd;
    if (p.variant == Variant::efficient) cache->mask = efficient_mask(gates).first;
    cache->h = h;
    cache->z = z;
    cache->mode = mode;
    cache->scan = scan;
  }
  return out;
}

PdmuGrads pdmu_backward(const PdmuParams& p, const PdmuCache& cache, const Mat& d_o, Mat* dx) {
  const Index T = cache.x.rows();
  const Index n = p.delay_count();
  if (d_o.rows() != T || d_o.cols() != p.hidden_dim())
    throw std::invalid_argument("pdmu_backward: upstream shape mismatch");

  const Mat dz = d_o.cwiseProduct(activation_grad(p.f_o, cache.z));

  PdmuGrads g;
  g.W_h = dz.transpose() * cache.h;
  g.W_x = dz.transpose() * cache.x;
  g.b_o = dz.colwise().sum().transpose();

  Mat dh = dz * p.W_h;
  Mat dx_total = dz * p.W_x;

  // combine_delayed backward. Effective forward gates: masked for efficient
  // (the mask is a constant in the backward pass, Eq. 19's straight-through
  // reading), raw otherwise.
  const Mat& gates = cache.gate_fwd.gates;
  Mat eff = gates;
  if (p.variant == Variant::efficient) eff = gates.cwiseProduct(cache.mask);

  Mat dm = dh;
  Mat d_gates = Mat::Zero(T, n);
  for (Index k = 0; k < T; ++k) {
    for (Index j = 1; j <= n && j <= k; ++j) {
      dm.row(k - j) += eff(k - j, j - 1) * dh.row(k);
      d_gates(k - j, j - 1) += dh.row(k).dot(cache.m.row(k - j));
    }
  }
  if (p.variant == Variant::efficient) d_gates = d_gates.cwiseProduct(cache.mask);

  Mat d_gates_bwd;
  if (p.variant == Variant::bidirectional) {
    const Mat& gb = cache.gate_bwd.gates;
    d_gates_bwd = Mat::Zero(T, gb.cols());
    for (Index k = 0; k < T; ++k) {
      for (Index j = 1; j <= gb.cols() && k + j < T; ++j) {
        dm.row(k + j) += gb(k + j, j - 1) * dh.row(k);
        d_gates_bwd(k + j, j - 1) += dh.row(k).dot(cache.m.row(k + j));
      }
    }
  }

  // forward gate branch
  {
    const Mat dd = softmax_rows_backward(gates, d_gates);
    const Vec dv = scan_input_adjoint(p.gate, dd, cache.mode, cache.scan);
    const Mat ds_v = dv.cwiseProduct(activation_grad(p.f_u, cache.gate_fwd.s_v).col(0));
    g.W_v = ds_v.transpose() * cache.x;
    g.b_v = Mat::Constant(1, 1, ds_v.sum());
    dx_total += ds_v * p.W_v;
  }

  // backward gate branch (scan ran over reversed time)
  if (p.variant == Variant::bidirectional) {
    const Mat dd = softmax_rows_backward(cache.gate_bwd.gates, d_gates_bwd);
    const Mat dd_rev = dd.colwise().reverse();
    const Vec dv_rev = scan_input_adjoint(p.gate, dd_rev, cache.mode, cache.scan);
    const Vec dv = dv_rev.reverse();
    const Mat ds_v = dv.cwiseProduct(activation_grad(p.f_u, cache.gate_bwd.s_v).col(0));
    g.W_v_rev = ds_v.transpose() * cache.x;
    g.b_v_rev = Mat::Constant(1, 1, ds_v.sum());
    dx_total += ds_v * p.W_v_rev;
  }

  // memory branch
  {
    const Vec du = scan_input_adjoint(p.memory, dm, cache.mode, cache.scan);
    const Mat ds_u = du.cwiseProduct(activation_grad(p.f_u, cache.s_u).col(0));
    g.W_u = ds_u.transpose() * cache.x;
    g.b_u = Mat::Constant(1, 1, ds_u.sum());
    dx_total += ds_u * p.W_u;
  }

  if (dx) *dx = std::move(dx_total);
  return g;
}

PdmuState::PdmuState(const PdmuParams& p)
    : p_(&p),
      m_(Vec::Zero(p.memory.order())),
      d_(Vec::Zero(p.gate.order())),
      pending_(Mat::Zero(p.gate.order(), p.memory.order())) {
  if (p.variant == Variant::bidirectional)
    throw UnsupportedModeError("PdmuState: bidirectional variant has no sequential form");
}

Vec PdmuState::step(const RowVec& x_k) {
  const PdmuParams& p = *p_;
  const Index n = p.gate.order();

  const Scalar su = p.W_u.row(0).dot(x_k) + p.b_u(0, 0);
  const Scalar sv = p.W_v.row(0).dot(x_k) + p.b_v(0, 0);
  u_ = Vec::Constant(1, apply_activation(p.f_u, su));
  v_ = Vec::Constant(1, apply_activation(p.f_u, sv));

  m_ = p.memory.A_bar * m_ + p.memory.B_bar * u_(0);
  d_ = p.gate.A_bar * d_ + p.gate.B_bar * v_(0);

  // softmax over the n gate logits
  const Scalar mx = d_.maxCoeff();
  Vec e = (d_.array() - mx).exp();
  gates_ = e / e.sum();
  if (p.variant == Variant::efficient) {
    Index best = 0;
    for (Index j = 1; j < n; ++j)
      if (gates_(j) > gates_(best)) best = j;
    Vec masked = Vec::Zero(n);
    masked(best) = gates_(best);
    gates_ = masked;
  }

  // consume the contributions scheduled for this step, then schedule m_
  // forward to offsets 1..n (slot pos_+j mod n is consumed at step k+j).
  h_ = m_ + pending_.row(pos_).transpose();
  pending_.row(pos_).setZero();
  for (Index j = 1; j <= n; ++j) {
    pending_.row((pos_ + j) % n) += gates_(j - 1) * m_.transpose();
  }
  pos_ = (pos_ + 1) % n;

  Vec z = p.W_h * h_ + p.W_x * x_k.transpose() + p.b_o;
  for (Index i = 0; i < z.size(); ++i) z(i) = apply_activation(p.f_o, z(i));
  return z;
}

}  // namespace dlssm
