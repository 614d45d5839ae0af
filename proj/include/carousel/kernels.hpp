#pragma once

// Dense numeric kernels behind the model fits. Templated on the Eigen
// expression so tests can run them in any floating scalar.

#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace carousel {

/// P = (gram + l2 I)^-1 through a Cholesky solve. Throws std::runtime_error
/// when the regularized Gram matrix is not positive definite.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> ease_precision(
    const Eigen::MatrixBase<Derived>& gram, typename Derived::Scalar l2) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (!(l2 > 0)) throw std::invalid_argument("EASE l2 must be > 0");
  Mat g = gram;
  g.diagonal().array() += l2;
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("EASE: regularized Gram matrix is not positive definite");
  }
  return llt.solve(Mat::Identity(g.rows(), g.cols()));
}

/// B(i,j) = -P(i,j) / P(j,j) off the diagonal, B(j,j) = 0.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> ease_weights(
    const Eigen::MatrixBase<Derived>& precision) {
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat b = -(precision * precision.diagonal().cwiseInverse().asDiagonal());
  b.diagonal().setZero();
  return b;
}

/// Squared error of one observed rating plus the L2 penalty on the two
/// factor rows it touches: 0.5 e^2 + 0.5 reg (|u|^2 + |v|^2).
template <typename DerivedU, typename DerivedV>
typename DerivedU::Scalar funksvd_sample_loss(const Eigen::MatrixBase<DerivedU>& u,
                                              const Eigen::MatrixBase<DerivedV>& v,
                                              typename DerivedU::Scalar rating,
                                              typename DerivedU::Scalar reg) {
  const auto e = rating - u.dot(v);
  return 0.5 * e * e + 0.5 * reg * (u.squaredNorm() + v.squaredNorm());
}

/// Gradient of funksvd_sample_loss w.r.t. u and v. The SGD step is
/// u -= lr * grad_u, v -= lr * grad_v, both taken at the old values.
template <typename DerivedU, typename DerivedV, typename DerivedGU, typename DerivedGV>
void funksvd_sample_gradient(const Eigen::MatrixBase<DerivedU>& u,
                             const Eigen::MatrixBase<DerivedV>& v,
                             typename DerivedU::Scalar rating, typename DerivedU::Scalar reg,
                             Eigen::MatrixBase<DerivedGU>& grad_u,
                             Eigen::MatrixBase<DerivedGV>& grad_v) {
  const auto e = rating - u.dot(v);
  grad_u = -e * v + reg * u;
  grad_v = -e * u + reg * v;
}

/// One SGD step on an observed rating, in place. Same update as
/// u -= lr * grad_u, v -= lr * grad_v with both gradients taken at the old
/// values; `scratch` holds the old u.
template <typename DerivedU, typename DerivedV, typename DerivedS>
void funksvd_sgd_step(Eigen::MatrixBase<DerivedU>& u, Eigen::MatrixBase<DerivedV>& v,
                      typename DerivedU::Scalar rating, typename DerivedU::Scalar learn_rate,
                      typename DerivedU::Scalar reg, Eigen::MatrixBase<DerivedS>& scratch) {
  const auto e = rating - u.dot(v);
  const auto keep = 1 - learn_rate * reg;
  const auto step = learn_rate * e;
  scratch = u;
  u = keep * u + step * v;
  v = keep * v + step * scratch;
}

}  // namespace carousel
