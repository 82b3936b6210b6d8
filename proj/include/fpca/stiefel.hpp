#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace fpca {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A point on the Stiefel manifold {B in R^{M x r} : B^T B = I_r}.
///
/// Construction validates orthonormality: drift up to 1e-6 in max-norm is
/// silently removed by a sign-preserving QR, anything larger throws
/// NotOnManifoldError.
class StiefelPoint {
 public:
  explicit StiefelPoint(MatrixXd values);

  const MatrixXd& values() const noexcept { return values_; }
  Index ambient_dim() const noexcept { return values_.rows(); }
  Index rank() const noexcept { return values_.cols(); }

  /// max |B^T B - I|
  double orthonormality_error() const;

  friend bool operator==(const StiefelPoint& a, const StiefelPoint& b) {
    return a.values_ == b.values_;
  }

 private:
  MatrixXd values_;
};

/// A tangent vector at `base`: B^T D is skew-symmetric (checked at
/// construction, tolerance 1e-8 relative to max(1, |D|_max)).
class TangentVector {
 public:
  TangentVector(StiefelPoint base, MatrixXd values);
  /// Zero vector at `base`.
  static TangentVector zero(StiefelPoint base);

  const MatrixXd& values() const noexcept { return values_; }
  const StiefelPoint& base() const noexcept { return base_; }

 private:
  StiefelPoint base_;
  MatrixXd values_;
};

/// Euclidean-to-Riemannian gradient map G = F - B F^T B.
TangentVector project_to_tangent(const StiefelPoint& b, const MatrixXd& euclid_grad);

/// Canonical metric Tr(D1^T (I - B B^T / 2) D2).
double canonical_inner(const StiefelPoint& b, const TangentVector& d1, const TangentVector& d2);

/// Same metric on raw matrices assumed tangent at b; no checks.
double canonical_inner(const MatrixXd& b, const MatrixXd& d1, const MatrixXd& d2);

/// exp(tX) of a skew-symmetric X via its SVD X = U D V^T:
/// U cos(tD) U^T + U sin(tD) V^T.
MatrixXd exp_skew(const MatrixXd& x, double t = 1.0);

/// Point at time t on the geodesic leaving b with velocity d.
StiefelPoint geodesic_step(const StiefelPoint& b, const TangentVector& d, double t);

// ---------------------------------------------------------------------------
// Vectorization of linear matrix equations.

/// Column-major vec.
VectorXd vec(const MatrixXd& x);
MatrixXd unvec(const VectorXd& v, Index rows, Index cols);
MatrixXd kron(const MatrixXd& a, const MatrixXd& b);
/// P_{m,n}: vec(X^T) = P_{m,n} vec(X) for X of size m x n.
MatrixXd commutation_matrix(Index m, Index n);

/// Terms of the linear matrix equation in an M x r unknown D:
///   sum A D + D K + sum C D E + sum E D^T F = L.
/// Any term may be omitted.
struct LinearMatrixEquation {
  Index rows = 0;
  Index cols = 0;
  std::vector<MatrixXd> left;                              // A: rows x rows
  std::vector<MatrixXd> right;                             // K: cols x cols
  std::vector<std::pair<MatrixXd, MatrixXd>> sandwich;     // (C, D)
  std::vector<std::pair<MatrixXd, MatrixXd>> transposed;   // (E, F), E: rows x cols
};

struct VecSystem {
  MatrixXd matrix;       // (M r) x (M r)
  VectorXd rhs;          // vec(L)
  MatrixXd permutation;  // P_{M,r}
};

/// Kronecker form of the equation:
///   [(I (x) A) + (K^T (x) I) + (D^T (x) C) + (F^T (x) E) P_{M,r}] vec(D) = vec(L).
VecSystem vectorize(const LinearMatrixEquation& eq, const MatrixXd& rhs);

// ---------------------------------------------------------------------------
// Newton system on the tangent space.

/// Euclidean second-derivative action D -> F_BB(D) (tangent valued).
using HessianAction = std::function<MatrixXd(const TangentVector&)>;

/// Factored Riemannian Hessian operator
///   Hess(D) = F_BB(D) - B skew(F_B^T D) - skew(D F_B^T) B - 1/2 Pi D B^T F_B
/// restricted to the tangent space, parameterized as D = B A + B_perp K
/// with A skew. The reduced system is assembled once and LU-factored.
/// Throws SingularSystemError when its reciprocal condition estimate is
/// below 1e-12.
class StiefelHessian {
 public:
  static constexpr double kMinReciprocalCondition = 1e-12;

  StiefelHessian(const StiefelPoint& b, const MatrixXd& euclid_grad,
                 const HessianAction& hess_apply);

  /// D with Hess(D) = rhs, rhs projected to the tangent space first.
  TangentVector solve(const MatrixXd& rhs) const;
  /// Full operator applied to a tangent vector.
  MatrixXd apply(const TangentVector& d) const;
  /// Dimension of the tangent space, M r - r (r + 1) / 2.
  Index tangent_dim() const noexcept { return basis_.cols(); }
  double reciprocal_condition() const noexcept { return rcond_; }
  const StiefelPoint& base() const noexcept { return base_; }

 private:
  StiefelPoint base_;
  MatrixXd euclid_grad_;
  HessianAction hess_apply_;
  MatrixXd closed_form_;  // Kronecker form of the non-F_BB terms, (M r) x (M r)
  MatrixXd basis_;        // (M r) x dim, orthonormal columns spanning the tangent space
  Eigen::PartialPivLU<MatrixXd> lu_;
  double rcond_ = 0.0;
};

/// Newton direction D = -Hess^{-1}(G) with G = project_to_tangent(b, euclid_grad).
TangentVector solve_newton_system(const StiefelPoint& b, const MatrixXd& euclid_grad,
                                  const HessianAction& hess_apply);

/// Orthonormal (Frobenius) basis of the tangent space at b, as vec'd columns.
MatrixXd tangent_basis(const StiefelPoint& b);

}  // namespace fpca
