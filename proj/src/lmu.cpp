#include "dlssm/lmu.hpp"

#include <stdexcept>

namespace dlssm {

Index LmuParams::param_count() const {
  return W_u.size() + b_u.size() + W_x.size() + W_m.size() + b_o.size();
}

DiscreteSystem make_window_system(Index order, Scalar theta, Scalar dt) {
  if (theta <= Scalar(0)) throw std::invalid_argument("make_window_system: theta must be positive");
  return zoh_discretize(pade_matrices(order), dt / theta);
}

Vec legendre_values(Index count, Scalar x) {
  Vec p(count);
  if (count >= 1) p(0) = Scalar(1);
  if (count >= 2) p(1) = x;
  for (Index i = 2; i < count; ++i) {
    p(i) = ((Scalar(2 * i - 1)) * x * p(i - 1) - Scalar(i - 1) * p(i - 2)) / Scalar(i);
  }
  return p;
}

Scalar window_reconstruct(const Vec& m_k, Scalar fraction) {
  return legendre_values(m_k.size(), Scalar(2) * fraction - Scalar(1)).dot(m_k);
}

LmuOutput lmu_forward(const LmuParams& p, const Mat& x, Mode mode, LmuCache* cache,
                      const ScanOptions& scan) {
  const Index T = x.rows();
  if (x.cols() != p.input_dim()) throw std::invalid_argument("lmu_forward: input width mismatch");
  if (!x.allFinite()) throw std::invalid_argument("lmu_forward: non-finite input");

  const Mat s_u = (x * p.W_u.transpose()).rowwise() + RowVec::Constant(1, p.b_u(0, 0));
  const Mat u = apply_activation(p.f_u, s_u);
  const Vec u_vec = u.col(0);

  Mat m;
  if (mode == Mode::parallel) {
    m = parallel_scan(p.memory, u_vec, scan);
  } else {
    m = sequential_scan(p.memory, u_vec, Vec::Zero(p.memory.order()));
  }

  const Mat z = ((x * p.W_x.transpose() + m * p.W_m.transpose()).rowwise() +
                 p.b_o.transpose());
  LmuOutput out;
  out.o = apply_activation(p.f_o, z);
  out.m = m;

  if (cache) {
    cache->x = x;
    cache->s_u = s_u;
    cache->u = u;
    cache->m = m;
    cache->z = z;
    cache->mode = mode;
    cache->scan = scan;
  }
  (void)T;
  return out;
}

LmuGrads lmu_backward(const LmuParams& p, const LmuCache& cache, const Mat& d_o, Mat* dx) {
  if (d_o.rows() != cache.z.rows() || d_o.cols() != cache.z.cols())
    throw std::invalid_argument("lmu_backward: upstream shape mismatch");

  const Mat dz = d_o.cwiseProduct(activation_grad(p.f_o, cache.z));

  LmuGrads g;
  g.W_x = dz.transpose() * cache.x;
  g.W_m = dz.transpose() * cache.m;
  g.b_o = dz.colwise().sum().transpose();

  const Mat dm = dz * p.W_m;
  const Vec du = scan_input_adjoint(p.memory, dm, cache.mode, cache.scan);
  const Mat ds_u = du.cwiseProduct(activation_grad(p.f_u, cache.s_u).col(0));

  g.W_u = ds_u.transpose() * cache.x;
  g.b_u = Mat::Constant(1, 1, ds_u.sum());

  if (dx) {
    *dx = dz * p.W_x + ds_u * p.W_u;
  }
  return g;
}

}  // namespace dlssm
