#pragma once

#include <Eigen/Core>

namespace dlssm {

#ifdef DLSSM_SINGLE_PRECISION
using Scalar = float;
#else
using Scalar = double;
#endif

using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
using Index = Eigen::Index;

/// Evaluation path. Both produce the same numbers; `sequential` keeps O(1)
/// state per step (the real-time contract), `parallel` evaluates all steps
/// at once via the LTI convolution form.
enum class Mode { sequential, parallel };

enum class Activation { relu, identity };

inline Scalar apply_activation(Activation a, Scalar x) {
  return a == Activation::relu ? (x > Scalar(0) ? x : Scalar(0)) : x;
}

inline Scalar activation_grad(Activation a, Scalar pre) {
  return a == Activation::relu ? (pre > Scalar(0) ? Scalar(1) : Scalar(0)) : Scalar(1);
}

inline Mat apply_activation(Activation a, Mat x) {
  if (a == Activation::relu) x = x.cwiseMax(Scalar(0));
  return x;
}

/// Elementwise derivative of the activation evaluated at the pre-activation.
inline Mat activation_grad(Activation a, const Mat& pre) {
  if (a == Activation::identity) return Mat::Ones(pre.rows(), pre.cols());
  return (pre.array() > Scalar(0)).cast<Scalar>();
}

}  // namespace dlssm
