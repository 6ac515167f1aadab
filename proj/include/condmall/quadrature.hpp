#ifndef CONDMALL_QUADRATURE_HPP
#define CONDMALL_QUADRATURE_HPP

#include <cmath>

#include <Eigen/Dense>

namespace condmall {

template <typename Scalar>
struct QuadratureRule {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> nodes;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> weights;
};

// Gauss-Legendre rule on [-1, 1] from the eigen-decomposition of the Jacobi
// matrix (Golub-Welsch).
template <typename Scalar>
QuadratureRule<Scalar> gauss_legendre(int order) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix jacobi = Matrix::Zero(order, order);
  for (int k = 1; k < order; ++k) {
    const Scalar kk = static_cast<Scalar>(k);
    const Scalar beta = kk / std::sqrt(Scalar(4) * kk * kk - Scalar(1));
    jacobi(k, k - 1) = beta;
    jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(jacobi);
  QuadratureRule<Scalar> rule;
  rule.nodes = es.eigenvalues();
  rule.weights = Scalar(2) * es.eigenvectors().row(0).transpose().array().square();
  return rule;
}

}  // namespace condmall

#endif  // CONDMALL_QUADRATURE_HPP
