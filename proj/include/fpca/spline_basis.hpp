#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace fpca {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Nodes and weights of a quadrature rule on [0, 1].
struct QuadratureRule {
  VectorXd nodes;
  VectorXd weights;
};

/// n-point Gauss-Legendre rule on [a, b] (Golub-Welsch).
QuadratureRule gauss_legendre(int n, double a = 0.0, double b = 1.0);

/// Gauss-Legendre with `nodes_per_interval` points on each of `intervals`
/// equal subintervals of [0, 1].
QuadratureRule composite_gauss_legendre(int intervals, int nodes_per_interval);

/// Orthonormalized B-spline basis on [0, 1] with equally spaced interior knots.
class BasisSystem {
 public:
  /// M functions of the given order (4 = cubic). Throws InvalidBasisError
  /// unless M >= order >= 2.
  BasisSystem(int num_functions, int order = 4);

  int size() const noexcept { return num_functions_; }
  int order() const noexcept { return order_; }
  const std::vector<double>& knots() const noexcept { return knots_; }
  /// T with phi(t) = T phi_raw(t); T is the inverse Cholesky factor of the raw Gram matrix.
  const MatrixXd& ortho_transform() const noexcept { return ortho_transform_; }
  const MatrixXd& raw_gram() const noexcept { return raw_gram_; }
  /// Composite Gauss-Legendre rule, exact for products of two basis functions.
  const QuadratureRule& quadrature() const noexcept { return quadrature_; }

  /// Raw B-spline values at t (Cox-de Boor), length M.
  VectorXd raw_values(double t) const;
  /// Orthonormalized basis values at t, length M.
  VectorXd values(double t) const;

 private:
  int num_functions_;
  int order_;
  std::vector<double> knots_;
  MatrixXd raw_gram_;
  MatrixXd ortho_transform_;
  QuadratureRule quadrature_;
};

inline BasisSystem build_basis(int num_functions, int order = 4) {
  return BasisSystem(num_functions, order);
}

/// M x m matrix whose column j is phi(times[j]). Throws DomainError for t outside [0, 1].
MatrixXd evaluate_design(const BasisSystem& basis, std::span<const double> times);

}  // namespace fpca
