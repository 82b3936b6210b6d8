#include "fpca/spline_basis.hpp"

#include <cmath>
#include <string>

#include "fpca/errors.hpp"

namespace fpca {

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw DimensionError("quadrature needs at least one node");
  // Jacobi matrix of the Legendre recurrence.
  MatrixXd jacobi = MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double beta = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k, k - 1) = beta;
    jacobi(k - 1, k) = beta;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double half = 0.5 * (b - a);
  for (int k = 0; k < n; ++k) {
    const double v0 = eig.eigenvectors()(0, k);
    rule.nodes[k] = a + half * (eig.eigenvalues()[k] + 1.0);
    rule.weights[k] = half * 2.0 * v0 * v0;
  }
  return rule;
}

QuadratureRule composite_gauss_legendre(int intervals, int nodes_per_interval) {
  if (intervals < 1) throw DimensionError("need at least one interval");
  QuadratureRule out;
  out.nodes.resize(static_cast<Index>(intervals) * nodes_per_interval);
  out.weights.resize(out.nodes.size());
  for (int i = 0; i < intervals; ++i) {
    const double a = static_cast<double>(i) / intervals;
    const double b = static_cast<double>(i + 1) / intervals;
    const QuadratureRule piece = gauss_legendre(nodes_per_interval, a, b);
    out.nodes.segment(static_cast<Index>(i) * nodes_per_interval, nodes_per_interval) = piece.nodes;
    out.weights.segment(static_cast<Index>(i) * nodes_per_interval, nodes_per_interval) =
        piece.weights;
  }
  return out;
}

BasisSystem::BasisSystem(int num_functions, int order)
    : num_functions_(num_functions), order_(order) {
  if (order < 2 || num_functions < order) {
    throw InvalidBasisError("basis needs M >= order >= 2 (M=" + std::to_string(num_functions) +
                            ", order=" + std::to_string(order) + ")");
  }
  const int interior = num_functions - order;
  knots_.assign(order, 0.0);
  for (int j = 1; j <= interior; ++j) knots_.push_back(static_cast<double>(j) / (interior + 1));
  knots_.insert(knots_.end(), order, 1.0);

  // Products of two basis functions are piecewise polynomials of degree
  // 2 (order - 1); order + 1 Gauss nodes per knot interval integrate them exactly.
  const int nodes_per_interval = (2 * order + 1) / 2 + 1;
  quadrature_ = composite_gauss_legendre(interior + 1, nodes_per_interval);

  raw_gram_ = MatrixXd::Zero(num_functions, num_functions);
  for (Index q = 0; q < quadrature_.nodes.size(); ++q) {
    const VectorXd v = raw_values(quadrature_.nodes[q]);
    raw_gram_.noalias() += quadrature_.weights[q] * v * v.transpose();
  }
  Eigen::LLT<MatrixXd> llt(raw_gram_);
  if (llt.info() != Eigen::Success) throw InvalidBasisError("raw Gram matrix is not positive definite");
  const MatrixXd lower = llt.matrixL();
  ortho_transform_ =
      lower.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(num_functions, num_functions));
}

VectorXd BasisSystem::raw_values(double t) const {
  const int m = num_functions_;
  const int k = order_;
  VectorXd out = VectorXd::Zero(m);
  // Knot span index mu with knots[mu] <= t < knots[mu + 1]; t = 1 uses the last span.
  int mu = m - 1;
  if (t < 1.0) {
    mu = k - 1;
    while (mu < m - 1 && knots_[mu + 1] <= t) ++mu;
  }
  // Cox-de Boor triangle, built up from order 1.
  std::vector<double> b(k, 0.0);
  b[0] = 1.0;
  std::vector<double> left(k), right(k);
  for (int j = 1; j < k; ++j) {
    left[j] = t - knots_[mu + 1 - j];
    right[j] = knots_[mu + j] - t;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double term = denom > 0.0 ? b[r] / denom : 0.0;
      b[r] = saved + right[r + 1] * term;
      saved = left[j - r] * term;
    }
    b[j] = saved;
  }
  for (int r = 0; r < k; ++r) out[mu - k + 1 + r] = b[r];
  return out;
}

VectorXd BasisSystem::values(double t) const { return ortho_transform_ * raw_values(t); }

MatrixXd evaluate_design(const BasisSystem& basis, std::span<const double> times) {
  MatrixXd out(basis.size(), static_cast<Index>(times.size()));
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double t = times[j];
    if (!(t >= 0.0 && t <= 1.0)) {
      throw DomainError("time " + std::to_string(t) + " is outside [0, 1]");
    }
    out.col(static_cast<Index>(j)) = basis.values(t);
  }
  return out;
}

}  // namespace fpca
