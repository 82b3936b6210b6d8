#include "fpca/stiefel.hpp"

#include <cmath>
#include <string>

#include "fpca/errors.hpp"

namespace fpca {
namespace {

constexpr double kKeepTolerance = 1e-10;
constexpr double kRepairTolerance = 1e-6;
constexpr double kTangentTolerance = 1e-8;
constexpr double kSkewTolerance = 1e-10;

double max_abs(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Thin Q of a Householder QR with columns flipped so that diag(R) >= 0.
MatrixXd sign_fixed_q(const MatrixXd& a) {
  Eigen::HouseholderQR<MatrixXd> qr(a);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(a.rows(), a.cols());
  const MatrixXd& packed = qr.matrixQR();
  for (Index j = 0; j < a.cols(); ++j) {
    if (packed(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

MatrixXd skew_part(const MatrixXd& x) { return 0.5 * (x - x.transpose()); }

}  // namespace

StiefelPoint::StiefelPoint(MatrixXd values) : values_(std::move(values)) {
  if (values_.cols() < 1 || values_.rows() < values_.cols()) {
    throw DimensionError("Stiefel point needs 1 <= r <= M, got " + std::to_string(values_.rows()) +
                         "x" + std::to_string(values_.cols()));
  }
  if (!values_.allFinite()) throw NotOnManifoldError("Stiefel point has non-finite entries");
  const double drift = orthonormality_error();
  if (drift <= kKeepTolerance) return;
  if (drift > kRepairTolerance) {
    throw NotOnManifoldError("columns are not orthonormal (drift " + std::to_string(drift) + ")");
  }
  values_ = sign_fixed_q(values_);
}

double StiefelPoint::orthonormality_error() const {
  const MatrixXd gram = values_.transpose() * values_;
  return max_abs(gram - MatrixXd::Identity(gram.rows(), gram.cols()));
}

TangentVector::TangentVector(StiefelPoint base, MatrixXd values)
    : base_(std::move(base)), values_(std::move(values)) {
  const MatrixXd& b = base_.values();
  if (values_.rows() != b.rows() || values_.cols() != b.cols()) {
    throw DimensionError("tangent vector shape does not match its base point");
  }
  const MatrixXd bd = b.transpose() * values_;
  const double residual = max_abs(bd + bd.transpose());
  if (!(residual <= kTangentTolerance * std::max(1.0, max_abs(values_)))) {
    throw NotSkewError("B^T D is not skew-symmetric (residual " + std::to_string(residual) + ")");
  }
}

TangentVector TangentVector::zero(StiefelPoint base) {
  MatrixXd z = MatrixXd::Zero(base.ambient_dim(), base.rank());
  return TangentVector(std::move(base), std::move(z));
}

TangentVector project_to_tangent(const StiefelPoint& b, const MatrixXd& euclid_grad) {
  const MatrixXd& bv = b.values();
  if (euclid_grad.rows() != bv.rows() || euclid_grad.cols() != bv.cols()) {
    throw DimensionError("gradient shape does not match the Stiefel point");
  }
  MatrixXd g = euclid_grad - bv * (euclid_grad.transpose() * bv);
  return TangentVector(b, std::move(g));
}

double canonical_inner(const MatrixXd& b, const MatrixXd& d1, const MatrixXd& d2) {
  // Tr(D1^T D2) - 1/2 Tr((B^T D1)^T (B^T D2))
  return (d1.cwiseProduct(d2)).sum() -
         0.5 * ((b.transpose() * d1).cwiseProduct(b.transpose() * d2)).sum();
}

double canonical_inner(const StiefelPoint& b, const TangentVector& d1, const TangentVector& d2) {
  if (!(d1.base() == b) || !(d2.base() == b)) {
    throw BaseMismatchError("tangent vectors are not based at the given point");
  }
  return canonical_inner(b.values(), d1.values(), d2.values());
}

MatrixXd exp_skew(const MatrixXd& x, double t) {
  if (x.rows() != x.cols()) throw DimensionError("exp_skew needs a square matrix");
  if (x.size() == 0) return x;
  const double asym = max_abs(x + x.transpose());
  if (!(asym <= kSkewTolerance * std::max(1.0, max_abs(x)))) {
    throw NotSkewError("matrix is not skew-symmetric (residual " + std::to_string(asym) + ")");
  }
  Eigen::JacobiSVD<MatrixXd> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const VectorXd& d = svd.singularValues();
  const MatrixXd& u = svd.matrixU();
  const MatrixXd& v = svd.matrixV();
  const VectorXd cos_d = (t * d).array().cos();
  const VectorXd sin_d = (t * d).array().sin();
  return u * cos_d.asDiagonal() * u.transpose() + u * sin_d.asDiagonal() * v.transpose();
}

StiefelPoint geodesic_step(const StiefelPoint& b, const TangentVector& d, double t) {
  if (!(d.base() == b)) throw BaseMismatchError("direction is not tangent at the given point");
  const MatrixXd& bv = b.values();
  const Index m = bv.rows();
  const Index r = bv.cols();

  MatrixXd a = bv.transpose() * d.values();
  const double asym = max_abs(a + a.transpose());
  if (!(asym <= kTangentTolerance * std::max(1.0, max_abs(d.values())))) {
    throw NotSkewError("B^T D is not skew-symmetric; direction is not a tangent vector");
  }
  a = skew_part(a);
  const MatrixXd normal = d.values() - bv * a;

  // Q spans the normal part. Factoring [B | Pi D] keeps Q orthogonal to B even
  // when Pi D is rank deficient.
  const Index k = std::min(r, m - r);
  MatrixXd q(m, k);
  if (k > 0) {
    MatrixXd stacked(m, 2 * r);
    stacked << bv, normal;
    Eigen::HouseholderQR<MatrixXd> qr(stacked);
    const MatrixXd full_q = qr.householderQ() * MatrixXd::Identity(m, std::min(m, 2 * r));
    q = full_q.middleCols(r, k);
  }
  const MatrixXd rr = q.transpose() * normal;  // k x r

  MatrixXd block = MatrixXd::Zero(r + k, r + k);
  block.topLeftCorner(r, r) = a;
  block.topRightCorner(r, k) = -rr.transpose();
  block.bottomLeftCorner(k, r) = rr;
  const MatrixXd e = exp_skew(block, t);
  MatrixXd out = bv * e.topLeftCorner(r, r);
  if (k > 0) out += q * e.bottomLeftCorner(k, r);
  return StiefelPoint(std::move(out));
}

VectorXd vec(const MatrixXd& x) { return Eigen::Map<const VectorXd>(x.data(), x.size()); }

MatrixXd unvec(const VectorXd& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw DimensionError("unvec size mismatch");
  return Eigen::Map<const MatrixXd>(v.data(), rows, cols);
}

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

MatrixXd commutation_matrix(Index m, Index n) {
  MatrixXd p = MatrixXd::Zero(m * n, m * n);
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) p(j + i * n, i + j * m) = 1.0;
  }
  return p;
}

VecSystem vectorize(const LinearMatrixEquation& eq, const MatrixXd& rhs) {
  const Index m = eq.rows;
  const Index r = eq.cols;
  if (rhs.rows() != m || rhs.cols() != r) throw DimensionError("right-hand side shape mismatch");
  const MatrixXd id_m = MatrixXd::Identity(m, m);
  const MatrixXd id_r = MatrixXd::Identity(r, r);

  VecSystem sys;
  sys.matrix = MatrixXd::Zero(m * r, m * r);
  sys.rhs = vec(rhs);
  sys.permutation = commutation_matrix(m, r);
  for (const auto& a : eq.left) {
    if (a.rows() != m || a.cols() != m) throw DimensionError("left factor must be M x M");
    sys.matrix += kron(id_r, a);
  }
  for (const auto& k : eq.right) {
    if (k.rows() != r || k.cols() != r) throw DimensionError("right factor must be r x r");
    sys.matrix += kron(k.transpose(), id_m);
  }
  for (const auto& [c, d] : eq.sandwich) {
    if (c.rows() != m || c.cols() != m || d.rows() != r || d.cols() != r) {
      throw DimensionError("sandwich factors must be M x M and r x r");
    }
    sys.matrix += kron(d.transpose(), c);
  }
  for (const auto& [e, f] : eq.transposed) {
    if (e.rows() != m || e.cols() != r || f.rows() != m || f.cols() != r) {
      throw DimensionError("transpose-term factors must both be M x r");
    }
    sys.matrix += kron(f.transpose(), e) * sys.permutation;
  }
  return sys;
}

MatrixXd tangent_basis(const StiefelPoint& b) {
  const MatrixXd& bv = b.values();
  const Index m = bv.rows();
  const Index r = bv.cols();
  const Index dim = m * r - r * (r + 1) / 2;

  Eigen::HouseholderQR<MatrixXd> qr(bv);
  const MatrixXd full_q = qr.householderQ();
  const MatrixXd perp = full_q.rightCols(m - r);

  MatrixXd basis(m * r, dim);
  Index col = 0;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (Index i = 0; i < r; ++i) {
    for (Index j = i + 1; j < r; ++j) {
      MatrixXd e = MatrixXd::Zero(m, r);
      e.col(j) = inv_sqrt2 * bv.col(i);
      e.col(i) = -inv_sqrt2 * bv.col(j);
      basis.col(col++) = vec(e);
    }
  }
  for (Index j = 0; j < r; ++j) {
    for (Index a = 0; a < m - r; ++a) {
      MatrixXd e = MatrixXd::Zero(m, r);
      e.col(j) = perp.col(a);
      basis.col(col++) = vec(e);
    }
  }
  return basis;
}

StiefelHessian::StiefelHessian(const StiefelPoint& b, const MatrixXd& euclid_grad,
                               const HessianAction& hess_apply)
    : base_(b), euclid_grad_(euclid_grad), hess_apply_(hess_apply) {
  const MatrixXd& bv = b.values();
  const Index m = bv.rows();
  const Index r = bv.cols();
  if (euclid_grad.rows() != m || euclid_grad.cols() != r) {
    throw DimensionError("gradient shape does not match the Stiefel point");
  }
  const MatrixXd& f = euclid_grad_;
  const MatrixXd pi = MatrixXd::Identity(m, m) - bv * bv.transpose();

  // Closed-form part of the operator:
  //   -B skew(F^T D)   = -1/2 B F^T D + 1/2 B D^T F
  //   -skew(D F^T) B   = -1/2 D F^T B + 1/2 F D^T B
  //   -1/2 Pi D B^T F
  LinearMatrixEquation eq;
  eq.rows = m;
  eq.cols = r;
  eq.left.push_back(-0.5 * bv * f.transpose());
  eq.right.push_back(-0.5 * f.transpose() * bv);
  eq.sandwich.emplace_back(-0.5 * pi, bv.transpose() * f);
  eq.transposed.emplace_back(0.5 * bv, f);
  eq.transposed.emplace_back(0.5 * f, bv);
  const VecSystem closed_form = vectorize(eq, MatrixXd::Zero(m, r));

  basis_ = tangent_basis(b);
  const Index dim = basis_.cols();
  if (dim == 0) {
    rcond_ = 1.0;
    return;
  }
  MatrixXd image(m * r, dim);
  for (Index k = 0; k < dim; ++k) {
    const TangentVector direction(base_, unvec(basis_.col(k), m, r));
    const MatrixXd hd = hess_apply_(direction);
    if (hd.rows() != m || hd.cols() != r) throw DimensionError("Hessian action has wrong shape");
    image.col(k) = vec(hd) + closed_form.matrix * basis_.col(k);
  }
  const MatrixXd reduced = basis_.transpose() * image;
  if (!reduced.allFinite()) throw SingularSystemError("Newton system has non-finite entries");
  lu_.compute(reduced);
  rcond_ = lu_.rcond();
  if (!(rcond_ >= kMinReciprocalCondition)) {
    throw SingularSystemError("Newton system is numerically singular (rcond " +
                              std::to_string(rcond_) + ")");
  }
  closed_form_ = closed_form.matrix;
}

TangentVector StiefelHessian::solve(const MatrixXd& rhs) const {
  const MatrixXd& bv = base_.values();
  if (rhs.rows() != bv.rows() || rhs.cols() != bv.cols()) {
    throw DimensionError("right-hand side shape does not match the Stiefel point");
  }
  if (basis_.cols() == 0) return TangentVector::zero(base_);
  const VectorXd coords = lu_.solve(basis_.transpose() * vec(rhs));
  return TangentVector(base_, unvec(basis_ * coords, bv.rows(), bv.cols()));
}

MatrixXd StiefelHessian::apply(const TangentVector& d) const {
  if (!(d.base() == base_)) throw BaseMismatchError("direction is not tangent at the Hessian base");
  const MatrixXd& bv = base_.values();
  if (basis_.cols() == 0) return MatrixXd::Zero(bv.rows(), bv.cols());
  const VectorXd out = vec(hess_apply_(d)) + closed_form_ * vec(d.values());
  return unvec(out, bv.rows(), bv.cols());
}

TangentVector solve_newton_system(const StiefelPoint& b, const MatrixXd& euclid_grad,
                                  const HessianAction& hess_apply) {
  const TangentVector g = project_to_tangent(b, euclid_grad);
  const StiefelHessian hessian(b, euclid_grad, hess_apply);
  return hessian.solve(-g.values());
}

}  // namespace fpca
